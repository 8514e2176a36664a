class ValidationError(ValueError):
    """Input violates a documented precondition (CLI exit code 1)."""


class CodecError(ValidationError):
    pass


class ManifestError(ValidationError):
    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}: line {lineno}: {message}")


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, message, io=False):
        self.stage = stage
        self.exit_code = 2 if io else 1
        super().__init__(f"stage '{stage}' failed: {message}")

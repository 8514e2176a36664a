"""Line-delimited JSON manifests.

Every stage reads and writes one JSON object per line so datasets stream
without being loaded whole. Output is written with sorted keys so identical
content is byte-identical on disk.
"""

import json
import os
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ManifestError
from .types import as_dict


def manifest_read(path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(path, lineno, f"malformed JSON ({e.msg})") from None
            if not isinstance(rec, dict):
                raise ManifestError(path, lineno, "expected a JSON object")
            yield rec


def dumps(record) -> str:
    return json.dumps(as_dict(record), sort_keys=True, separators=(",", ":"), allow_nan=False)


def manifest_write(path, records: Iterable) -> int:
    """Write records (dicts or objects with ``to_dict``); returns the count."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(dumps(rec))
            f.write("\n")
            n += 1
    os.replace(tmp, path)
    return n


def manifest_append(path, records: Iterable) -> None:
    with open(path, "a", encoding="utf-8") as f:
        for rec in records:
            f.write(dumps(rec))
            f.write("\n")


def read_typed(path, cls) -> list:
    out = []
    for lineno, rec in enumerate(manifest_read(path), start=1):
        try:
            out.append(cls.from_dict(rec))
        except (KeyError, TypeError, ValueError) as e:
            raise ManifestError(path, lineno, f"invalid {cls.__name__}: {e}") from None
    return out

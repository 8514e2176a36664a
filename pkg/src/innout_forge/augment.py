"""Training-time augmentation draws. Every sampler takes an explicit generator."""

from typing import Optional

import numpy as np

from .errors import ValidationError


def speed_augment(needed_frames: int, prob: float, rng: np.random.Generator,
                  available_frames: Optional[int] = None):
    """With probability ``prob`` fetch every second frame (a 2x speed-up).

    Returns ``(stride, source_indices)``. Falls back to stride 1 when the
    source clip is too short for stride 2. One uniform is consumed per call
    regardless of the outcome.
    """
    if needed_frames <= 0:
        raise ValidationError("needed_frames must be positive")
    if not 0.0 <= prob <= 1.0:
        raise ValidationError("prob must lie in [0, 1]")
    stride = 2 if rng.random() < prob else 1
    if stride == 2 and available_frames is not None and available_frames < 2 * needed_frames - 1:
        stride = 1
    return stride, list(range(0, stride * needed_frames, stride))


def dropout_flags(rng: np.random.Generator, p_text: float = 0.05, p_frame: float = 0.05, p_id: float = 0.15):
    """Independent (drop_text, drop_first_frame, drop_id) draws."""
    probs = np.array([p_text, p_frame, p_id], dtype=np.float64)
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValidationError("dropout probabilities must lie in [0, 1]")
    u = rng.random(3)
    return tuple(bool(v) for v in u < probs)

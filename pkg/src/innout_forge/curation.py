"""Metadata, score-percentile, scene-cut and camera-motion filters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .types import PoseSample, VideoRecord


@dataclass(frozen=True)
class BasicFilterConfig:
    min_duration_s: float = 4.0
    max_duration_s: float = 20.0
    fps_min: float = 20.0
    fps_max: float = 31.0
    min_aspect_w_over_h: float = 1.35
    min_width_px: int = 400

    def __post_init__(self):
        if not (self.min_duration_s < self.max_duration_s and self.fps_min < self.fps_max):
            raise ValidationError("basic filter ranges must satisfy min < max")


def basic_filter(r: VideoRecord, cfg: BasicFilterConfig = BasicFilterConfig()) -> Optional[str]:
    """Return None to keep, else the first violated rule name.

    Rules are checked in the order duration, fps, aspect, width. Duration
    and fps bounds are inclusive; the aspect ratio must strictly exceed the
    minimum.
    """
    for name in ("duration_s", "fps", "width_px", "height_px"):
        v = getattr(r, name, None)
        if v is None or not math.isfinite(v) or v <= 0:
            raise ValidationError(f"{r.video_id}: missing or invalid metadata field {name}")
    if not (cfg.min_duration_s <= r.duration_s <= cfg.max_duration_s):
        return "duration"
    if not (cfg.fps_min <= r.fps <= cfg.fps_max):
        return "fps"
    if not (r.width_px / r.height_px > cfg.min_aspect_w_over_h):
        return "aspect"
    if r.width_px < cfg.min_width_px:
        return "width"
    return None


class Tail(str, Enum):
    LOW = "Low"
    HIGH = "High"
    BOTH = "Both"


@dataclass(frozen=True)
class PercentileRule:
    metric_name: str
    tail: Tail
    low_fraction: float = 0.0
    high_fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tail", Tail(self.tail))
        lo, hi = self.low_fraction, self.high_fraction
        if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0):
            raise ValidationError(f"{self.metric_name}: fractions must lie in [0, 1]")
        if self.tail == Tail.BOTH and not lo + hi < 1.0:
            raise ValidationError(f"{self.metric_name}: low + high fraction must be < 1")

    @property
    def effective(self) -> tuple:
        lo = self.low_fraction if self.tail in (Tail.LOW, Tail.BOTH) else 0.0
        hi = self.high_fraction if self.tail in (Tail.HIGH, Tail.BOTH) else 0.0
        return lo, hi


def _floor_count(n: int, frac: float) -> int:
    # absorbs products such as 100 * 0.29 == 28.999999999999996
    return math.floor(n * frac + 1e-9)


def percentile_filter(values: Sequence[tuple], rule: PercentileRule) -> set:
    """Ids dropped by ``rule``.

    Values are sorted ascending with ties broken by id; the first
    floor(n * low) and the last floor(n * high) ids are dropped.
    """
    if not values:
        raise ValidationError("percentile_filter needs at least one value")
    order = sorted(values, key=lambda iv: (iv[1], iv[0]))
    n = len(order)
    lo, hi = rule.effective
    n_lo = _floor_count(n, lo)
    n_hi = _floor_count(n, hi)
    dropped = {i for i, _ in order[:n_lo]}
    if n_hi:
        dropped.update(i for i, _ in order[n - n_hi:])
    return dropped


def scene_filter(r: VideoRecord) -> Optional[str]:
    # an undetected scene count (0) is kept
    return "scene" if r.scene_count > 1 else None


def _rotation_geodesic(r1: np.ndarray, r2: np.ndarray) -> float:
    c = (np.trace(r1.T @ r2) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, float(c))))


def camera_motion_score(a: PoseSample, b: PoseSample) -> float:
    """Translation distance plus rotation geodesic angle between two poses."""
    a.validate()
    b.validate()
    return float(np.linalg.norm(a.translation - b.translation)) + _rotation_geodesic(a.rotation, b.rotation)


@dataclass(frozen=True)
class CameraStats:
    rotation_err: float
    translation_err: float
    focal_change: float


def camera_series_stats(poses: Sequence[PoseSample]) -> CameraStats:
    """Summed rotation and translation terms over consecutive pairs, and the
    largest relative focal change."""
    if len(poses) < 2:
        raise ValidationError("camera statistics need at least two pose samples")
    for p in poses:
        p.validate()
    rot = trans = focal = 0.0
    for a, b in zip(poses, poses[1:]):
        rot += _rotation_geodesic(a.rotation, b.rotation)
        trans += float(np.linalg.norm(a.translation - b.translation))
        focal = max(focal, abs(b.focal - a.focal) / a.focal)
    return CameraStats(rot, trans, focal)


def camera_window(poses: Iterable[PoseSample], window_s: float = 10.0, sample_fps: float = 6.0) -> list:
    """Poses ordered by frame, truncated to the estimation window."""
    ordered = sorted(poses, key=lambda p: p.frame_index)
    return ordered[: max(2, int(round(window_s * sample_fps)))]

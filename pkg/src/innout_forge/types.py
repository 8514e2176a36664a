"""Domain records shared by every curation stage.

Coordinates are (x right, y down) with the origin at the top-left pixel.
Boxes are half-open: ``[x0, x1) x [y0, y1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np

from .errors import ValidationError


def _split_extra(d: dict, known: set) -> dict:
    return {k: v for k, v in d.items() if k not in known}


@dataclass(frozen=True)
class MaskRLE:
    """Column-major run-length mask; ``counts[0]`` is a run of zeros."""

    width: int
    height: int
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"mask dims must be positive, got {self.width}x{self.height}")
        if any(c < 0 for c in self.counts):
            raise ValidationError("negative run length")
        if sum(self.counts) != self.width * self.height:
            raise ValidationError(
                f"run lengths sum to {sum(self.counts)}, expected {self.width * self.height}"
            )
        for i in range(1, len(self.counts) - 1):
            if self.counts[i] == 0 and self.counts[i + 1] == 0:
                raise ValidationError("consecutive zero-length runs")

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict) -> "MaskRLE":
        return cls(int(d["width"]), int(d["height"]), tuple(d["counts"]))


@dataclass(frozen=True)
class CanvasBox:
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def validate(self, canvas_w: int, canvas_h: int) -> None:
        if not (0 <= self.x0 < self.x1 <= canvas_w and 0 <= self.y0 < self.y1 <= canvas_h):
            raise ValidationError(f"box {self} outside {canvas_w}x{canvas_h}")

    def iou(self, other: "CanvasBox") -> float:
        iw = min(self.x1, other.x1) - max(self.x0, other.x0)
        ih = min(self.y1, other.y1) - max(self.y0, other.y0)
        if iw <= 0 or ih <= 0:
            return 0.0
        inter = iw * ih
        return inter / (self.width * self.height + other.width * other.height - inter)

    def to_list(self) -> list:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_list(cls, v) -> "CanvasBox":
        return cls(*(int(c) for c in v))


@dataclass(frozen=True)
class CanvasSpec:
    """First-frame region plus per-side expansion into the canvas."""

    frame_w: int
    frame_h: int
    expand_top: int = 0
    expand_left: int = 0
    expand_bottom: int = 0
    expand_right: int = 0

    def __post_init__(self):
        if self.frame_w <= 0 or self.frame_h <= 0:
            raise ValidationError("frame dims must be positive")
        if min(self.expand_top, self.expand_left, self.expand_bottom, self.expand_right) < 0:
            raise ValidationError("canvas expansions must be non-negative")

    @property
    def canvas_w(self) -> int:
        return self.frame_w + self.expand_left + self.expand_right

    @property
    def canvas_h(self) -> int:
        return self.frame_h + self.expand_top + self.expand_bottom

    @property
    def first_frame_box(self) -> CanvasBox:
        return CanvasBox(
            self.expand_left,
            self.expand_top,
            self.expand_left + self.frame_w,
            self.expand_top + self.frame_h,
        )

    def to_dict(self) -> dict:
        return {
            "frame_w": self.frame_w,
            "frame_h": self.frame_h,
            "expand_top": self.expand_top,
            "expand_left": self.expand_left,
            "expand_bottom": self.expand_bottom,
            "expand_right": self.expand_right,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CanvasSpec":
        return cls(**{k: int(d[k]) for k in cls.__dataclass_fields__ if k in d})

    @classmethod
    def from_box(cls, box: CanvasBox, full_w: int, full_h: int) -> "CanvasSpec":
        """Canvas = full video frame, first frame = ``box`` inside it."""
        return cls(
            frame_w=box.width,
            frame_h=box.height,
            expand_top=box.y0,
            expand_left=box.x0,
            expand_bottom=full_h - box.y1,
            expand_right=full_w - box.x1,
        )


_VIDEO_FIELDS = {
    "video_id", "dataset_tag", "width_px", "height_px", "fps", "duration_s",
    "frame_count", "scene_count", "iframe_indices", "scores", "caption", "drop_reason",
}


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    dataset_tag: str
    width_px: int
    height_px: int
    fps: float
    duration_s: float
    frame_count: int
    scene_count: int = 0
    iframe_indices: tuple = ()
    scores: dict = field(default_factory=dict)
    caption: Optional[str] = None
    drop_reason: Optional[str] = None
    extra: dict = field(default_factory=dict, compare=True)

    def validate(self) -> None:
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValidationError(f"{self.video_id}: non-positive frame dims")
        if self.fps <= 0 or self.duration_s <= 0 or self.frame_count <= 0:
            raise ValidationError(f"{self.video_id}: non-positive fps/duration/frame_count")
        if abs(self.frame_count - self.fps * self.duration_s) > 1.0 + 1e-9:
            raise ValidationError(f"{self.video_id}: frame_count disagrees with fps*duration")
        idx = list(self.iframe_indices)
        if any(b <= a for a, b in zip(idx, idx[1:])) or (idx and (idx[0] < 0 or idx[-1] >= self.frame_count)):
            raise ValidationError(f"{self.video_id}: bad iframe_indices")

    @property
    def aspect(self) -> float:
        return self.width_px / self.height_px

    def to_dict(self) -> dict:
        d = dict(self.extra)
        d.update(
            video_id=self.video_id,
            dataset_tag=self.dataset_tag,
            width_px=self.width_px,
            height_px=self.height_px,
            fps=self.fps,
            duration_s=self.duration_s,
            frame_count=self.frame_count,
            scene_count=self.scene_count,
            iframe_indices=list(self.iframe_indices),
            scores=dict(self.scores),
            caption=self.caption,
            drop_reason=self.drop_reason,
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VideoRecord":
        required = ("video_id", "width_px", "height_px", "fps", "duration_s")
        missing = [k for k in required if d.get(k) is None]
        if missing:
            raise ValidationError(f"video record missing fields: {', '.join(missing)}")
        fps = float(d["fps"])
        duration = float(d["duration_s"])
        frame_count = d.get("frame_count")
        if frame_count is None:
            frame_count = int(round(fps * duration))
        return cls(
            video_id=str(d["video_id"]),
            dataset_tag=str(d.get("dataset_tag", "default")),
            width_px=int(d["width_px"]),
            height_px=int(d["height_px"]),
            fps=fps,
            duration_s=duration,
            frame_count=int(frame_count),
            scene_count=int(d.get("scene_count", 0) or 0),
            iframe_indices=tuple(int(i) for i in d.get("iframe_indices", ())),
            scores={k: float(v) for k, v in (d.get("scores") or {}).items()},
            caption=d.get("caption"),
            drop_reason=d.get("drop_reason"),
            extra=_split_extra(d, _VIDEO_FIELDS),
        )


@dataclass(frozen=True)
class TrackPoint:
    """Per-point view of a track; ``positions`` rows are (x, y, visible)."""

    point_id: int
    positions: tuple
    backtracked_start: Optional[tuple] = None

    def to_dict(self) -> dict:
        d = {
            "point_id": self.point_id,
            "positions": [[float(x), float(y), bool(v)] for x, y, v in self.positions],
        }
        if self.backtracked_start is not None:
            d["backtracked_start"] = [float(c) for c in self.backtracked_start]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrackPoint":
        bt = d.get("backtracked_start")
        return cls(
            point_id=int(d["point_id"]),
            positions=tuple((float(p[0]), float(p[1]), bool(p[2])) for p in d["positions"]),
            backtracked_start=None if bt is None else (float(bt[0]), float(bt[1])),
        )


_TRACK_FIELDS = {"object_id", "class_label", "points", "first_frame_mask"}


class ObjectTrack:
    """All tracking points of one object, stored as dense arrays.

    ``xy`` has shape (P, F, 2), ``visible`` (P, F), ``backtracked`` (P, 2) with
    NaN rows where no back-tracked start exists.
    """

    __slots__ = ("object_id", "class_label", "point_ids", "xy", "visible",
                 "backtracked", "first_frame_mask", "extra")

    def __init__(self, object_id, class_label, point_ids, xy, visible,
                 backtracked=None, first_frame_mask=None, extra=None):
        self.object_id = int(object_id)
        self.class_label = str(class_label)
        self.point_ids = np.asarray(point_ids, dtype=np.int64)
        self.xy = np.asarray(xy, dtype=np.float64)
        self.visible = np.asarray(visible, dtype=bool)
        if backtracked is None:
            backtracked = np.full((len(self.point_ids), 2), np.nan)
        self.backtracked = np.asarray(backtracked, dtype=np.float64)
        self.first_frame_mask = first_frame_mask
        self.extra = dict(extra or {})
        self._check()

    def _check(self):
        p = len(self.point_ids)
        if p == 0:
            raise ValidationError(f"object {self.object_id}: no tracking points")
        if self.xy.ndim != 3 or self.xy.shape[0] != p or self.xy.shape[2] != 2:
            raise ValidationError(f"object {self.object_id}: xy must be (P, F, 2)")
        if self.visible.shape != self.xy.shape[:2] or self.backtracked.shape != (p, 2):
            raise ValidationError(f"object {self.object_id}: inconsistent array shapes")
        if not np.all(np.isfinite(self.xy)):
            raise ValidationError(f"object {self.object_id}: non-finite coordinates")
        if len(set(self.point_ids.tolist())) != p:
            raise ValidationError(f"object {self.object_id}: duplicate point ids")

    @property
    def num_points(self) -> int:
        return self.xy.shape[0]

    @property
    def num_frames(self) -> int:
        return self.xy.shape[1]

    def subset(self, keep) -> "ObjectTrack":
        """Track restricted to points where boolean ``keep`` is true."""
        keep = np.asarray(keep, dtype=bool)
        return ObjectTrack(self.object_id, self.class_label, self.point_ids[keep],
                           self.xy[keep], self.visible[keep], self.backtracked[keep],
                           self.first_frame_mask, self.extra)

    def with_xy(self, xy, backtracked=None) -> "ObjectTrack":
        return ObjectTrack(self.object_id, self.class_label, self.point_ids, xy,
                           self.visible, self.backtracked if backtracked is None else backtracked,
                           self.first_frame_mask, self.extra)

    @property
    def points(self) -> list:
        out = []
        for i, pid in enumerate(self.point_ids.tolist()):
            bt = self.backtracked[i]
            out.append(TrackPoint(
                pid,
                tuple((float(x), float(y), bool(v))
                      for (x, y), v in zip(self.xy[i], self.visible[i])),
                None if np.isnan(bt).any() else (float(bt[0]), float(bt[1])),
            ))
        return out

    @classmethod
    def from_points(cls, object_id, class_label, points, first_frame_mask=None, extra=None):
        if not points:
            raise ValidationError(f"object {object_id}: no tracking points")
        n_frames = {len(p.positions) for p in points}
        if len(n_frames) != 1:
            raise ValidationError(f"object {object_id}: points disagree on frame count")
        arr = np.array([[pos for pos in p.positions] for p in points], dtype=np.float64)
        bt = np.array([p.backtracked_start if p.backtracked_start is not None else (np.nan, np.nan)
                       for p in points], dtype=np.float64)
        return cls(object_id, class_label, [p.point_id for p in points],
                   arr[..., :2], arr[..., 2] > 0.5, bt, first_frame_mask, extra)

    def to_dict(self) -> dict:
        d = dict(self.extra)
        d.update(
            object_id=self.object_id,
            class_label=self.class_label,
            points=[p.to_dict() for p in self.points],
        )
        if self.first_frame_mask is not None:
            d["first_frame_mask"] = self.first_frame_mask.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectTrack":
        mask = d.get("first_frame_mask")
        return cls.from_points(
            d["object_id"],
            d.get("class_label", ""),
            [TrackPoint.from_dict(p) for p in d["points"]],
            None if mask is None else MaskRLE.from_dict(mask),
            _split_extra(d, _TRACK_FIELDS),
        )

    def __eq__(self, other):
        if not isinstance(other, ObjectTrack):
            return NotImplemented
        return (self.object_id == other.object_id and self.class_label == other.class_label
                and np.array_equal(self.point_ids, other.point_ids)
                and np.array_equal(self.xy, other.xy)
                and np.array_equal(self.visible, other.visible)
                and np.array_equal(self.backtracked, other.backtracked, equal_nan=True)
                and self.first_frame_mask == other.first_frame_mask
                and self.extra == other.extra)

    def __repr__(self):
        return (f"ObjectTrack(object_id={self.object_id}, class_label={self.class_label!r}, "
                f"points={self.num_points}, frames={self.num_frames})")


class PatternKind(str, Enum):
    FRAME_IN = "FrameIn"
    FRAME_OUT = "FrameOut"


_PATTERN_FIELDS = {"video_id", "starter_frame", "box", "object_id", "kind", "id_crop"}


@dataclass(frozen=True)
class PatternRecord:
    video_id: str
    starter_frame: int
    box: CanvasBox
    object_id: int
    kind: PatternKind
    id_crop: Optional[tuple] = None  # (CanvasBox rect, MaskRLE)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == PatternKind.FRAME_IN and self.id_crop is None:
            raise ValidationError("FrameIn pattern requires an id_crop")

    def to_dict(self) -> dict:
        d = dict(self.extra)
        d.update(
            video_id=self.video_id,
            starter_frame=self.starter_frame,
            box=self.box.to_list(),
            object_id=self.object_id,
            kind=self.kind.value,
            id_crop=None if self.id_crop is None else {
                "rect": self.id_crop[0].to_list(),
                "mask": self.id_crop[1].to_dict(),
            },
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PatternRecord":
        crop = d.get("id_crop")
        return cls(
            video_id=str(d["video_id"]),
            starter_frame=int(d["starter_frame"]),
            box=CanvasBox.from_list(d["box"]),
            object_id=int(d["object_id"]),
            kind=PatternKind(d["kind"]),
            id_crop=None if crop is None else (CanvasBox.from_list(crop["rect"]),
                                               MaskRLE.from_dict(crop["mask"])),
            extra=_split_extra(d, _PATTERN_FIELDS),
        )


@dataclass(frozen=True)
class EmbeddingVec:
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ValidationError("embedding must be a non-empty finite vector")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.size

    def normalized(self) -> "EmbeddingVec":
        n = float(np.linalg.norm(self.values))
        if n == 0.0:
            raise ValidationError("cannot normalize a zero embedding")
        return EmbeddingVec(self.values / n)


@dataclass(frozen=True)
class PoseSample:
    frame_index: int
    rotation: np.ndarray = field(compare=False)
    translation: np.ndarray = field(compare=False)
    focal: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))

    def validate(self, tol: float = 1e-6) -> None:
        r = self.rotation
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(self.translation)):
            raise ValidationError(f"pose {self.frame_index}: non-finite values")
        if abs(np.linalg.det(r) - 1.0) >= tol or np.abs(r.T @ r - np.eye(3)).max() >= tol:
            raise ValidationError(f"pose {self.frame_index}: rotation is not orthonormal")
        if not (self.focal > 0 and math.isfinite(self.focal)):
            raise ValidationError(f"pose {self.frame_index}: focal must be positive")

    def to_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "rotation": self.rotation.ravel().tolist(),
            "translation": self.translation.tolist(),
            "focal": self.focal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PoseSample":
        return cls(int(d["frame_index"]), d["rotation"], d["translation"], float(d["focal"]))


def as_dict(obj: Any) -> dict:
    return obj if isinstance(obj, dict) else obj.to_dict()

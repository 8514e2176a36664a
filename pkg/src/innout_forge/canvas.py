"""Unbounded-canvas geometry: expansion, crop-back, identity placement and
loss-region masks."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ValidationError
from .types import CanvasBox, CanvasSpec, ObjectTrack

WHITE = 255


def canvas_expand(spec: CanvasSpec, x, y):
    """First-frame coordinates to canvas coordinates (works on arrays)."""
    return x + spec.expand_left, y + spec.expand_top


def canvas_expand_track(spec: CanvasSpec, track: ObjectTrack) -> ObjectTrack:
    shift = np.array([spec.expand_left, spec.expand_top], dtype=np.float64)
    return track.with_xy(track.xy + shift, track.backtracked + shift)


def canvas_expand_raster(spec: CanvasSpec, raster: np.ndarray, fill=0) -> np.ndarray:
    """Pad an (H, W, ...) raster of the first-frame size into the canvas."""
    raster = np.asarray(raster)
    if raster.shape[:2] != (spec.frame_h, spec.frame_w):
        raise ValidationError(f"raster is {raster.shape[:2]}, expected {(spec.frame_h, spec.frame_w)}")
    out = np.full((spec.canvas_h, spec.canvas_w) + raster.shape[2:], fill, dtype=raster.dtype)
    out[spec.expand_top:spec.expand_top + spec.frame_h,
        spec.expand_left:spec.expand_left + spec.frame_w] = raster
    return out


def crop_back(raster: np.ndarray, spec: CanvasSpec) -> np.ndarray:
    """Cut the first-frame rectangle back out of a canvas-sized raster."""
    raster = np.asarray(raster)
    if raster.shape[:2] != (spec.canvas_h, spec.canvas_w):
        raise ValidationError(f"raster is {raster.shape[:2]}, canvas is {(spec.canvas_h, spec.canvas_w)}")
    return raster[spec.expand_top:spec.expand_top + spec.frame_h,
                  spec.expand_left:spec.expand_left + spec.frame_w].copy()


def id_reference_placement(crop_w: int, crop_h: int, canvas_w: int, canvas_h: int):
    """Letterbox an identity crop into the canvas: returns (scale, paste rect).

    The crop is scaled to fit entirely and centred; the rest is white pad.
    """
    if min(crop_w, crop_h, canvas_w, canvas_h) <= 0:
        raise ValidationError("dims must be positive")
    scale = min(canvas_w / crop_w, canvas_h / crop_h)
    w = min(canvas_w, max(1, int(np.floor(crop_w * scale + 0.5))))
    h = min(canvas_h, max(1, int(np.floor(crop_h * scale + 0.5))))
    x0 = (canvas_w - w) // 2
    y0 = (canvas_h - h) // 2
    return scale, CanvasBox(x0, y0, x0 + w, y0 + h)


def id_placeholder(canvas_w: int, canvas_h: int) -> np.ndarray:
    """All-white RGB raster standing in for a missing identity reference."""
    if canvas_w <= 0 or canvas_h <= 0:
        raise ValidationError("placeholder dims must be positive")
    return np.full((canvas_h, canvas_w, 3), WHITE, dtype=np.uint8)


class LossRegion(str, Enum):
    FULL_FIELD = "FullField"
    FIRST_FRAME_ONLY = "FirstFrameOnly"


def loss_region_mask(spec: CanvasSpec, mode: LossRegion = LossRegion.FULL_FIELD) -> np.ndarray:
    mode = LossRegion(mode)
    if mode == LossRegion.FULL_FIELD:
        return np.ones((spec.canvas_h, spec.canvas_w), dtype=bool)
    out = np.zeros((spec.canvas_h, spec.canvas_w), dtype=bool)
    b = spec.first_frame_box
    out[b.y0:b.y1, b.x0:b.x1] = True
    return out

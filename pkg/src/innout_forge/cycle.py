"""Trajectory validation: round-trip error, object viability, motion
magnitude and mask-consistency refinement.

The point-level filters return a boolean keep-mask over ``track.point_ids``;
``track.subset(keep)`` materialises the retained points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .rle import rle_decode
from .types import MaskRLE, ObjectTrack

TRACK_W = 512
TRACK_H = 384


@dataclass(frozen=True)
class CycleConfig:
    threshold_frac: float = 0.04
    viability_frac: float = 1.0 / 3.0
    motion_low: float = 0.05
    motion_high: float = 0.05
    mask_tol_px: int = 2
    track_w: int = TRACK_W
    track_h: int = TRACK_H


def roundtrip_filter(track: ObjectTrack, height_px: int, threshold_frac: float = 0.04) -> np.ndarray:
    """Keep points whose back-tracked start lies within
    ``threshold_frac * height_px`` of the forward start."""
    bt = track.backtracked
    if np.isnan(bt).any():
        missing = track.point_ids[np.isnan(bt).any(axis=1)].tolist()
        raise ValidationError(f"object {track.object_id}: points {missing} lack backtracked_start")
    err = np.hypot(*(track.xy[:, 0, :] - bt).T)
    return err <= threshold_frac * height_px


def object_viability(original_count: int, retained_count: int, viability_frac: float = 1.0 / 3.0) -> bool:
    """False when strictly more than ``viability_frac`` of the points were dropped."""
    if original_count <= 0:
        raise ValidationError("object_viability needs a positive original count")
    if not 0 <= retained_count <= original_count:
        raise ValidationError("retained count must lie in [0, original]")
    # rational comparison so that exactly one third dropped is kept
    limit = Fraction(viability_frac).limit_denominator(10_000)
    return Fraction(original_count - retained_count, original_count) <= limit


def motion_stats(track: ObjectTrack, height_px: int) -> tuple:
    """(mean, max) consecutive-frame centroid displacement divided by height.

    Frames with no visible point are skipped.
    """
    if track.num_frames < 2:
        raise ValidationError("motion_stats needs at least two frames")
    vis = track.visible
    n_vis = vis.sum(axis=0)
    usable = n_vis > 0
    if usable.sum() < 2:
        raise ValidationError(f"object {track.object_id}: fewer than two frames with visible points")
    w = vis[:, usable].astype(np.float64)
    cx = (track.xy[:, usable, 0] * w).sum(axis=0) / n_vis[usable]
    cy = (track.xy[:, usable, 1] * w).sum(axis=0) / n_vis[usable]
    step = np.hypot(np.diff(cx), np.diff(cy)) / height_px
    return float(step.mean()), float(step.max())


def chebyshev_distance_map(mask: MaskRLE) -> np.ndarray:
    """Per-pixel chessboard distance to the nearest true pixel."""
    return _distance_grid(rle_decode(mask))


def _distance_grid(grid: np.ndarray) -> np.ndarray:
    if not grid.any():
        return np.full(grid.shape, np.inf)
    return ndimage.distance_transform_cdt(~grid, metric="chessboard").astype(np.float64)


def _point_distance(grid: np.ndarray, dist: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = dist.shape
    # rounded pixel, ties toward the top-left
    px = np.ceil(x - 0.5).astype(np.int64)
    py = np.ceil(y - 0.5).astype(np.int64)
    out = np.full(len(px), np.inf)
    inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
    out[inside] = dist[py[inside], px[inside]]
    if (~inside).any() and grid.any():
        # points off the image: brute force over the mask pixels
        my, mx = np.nonzero(grid)
        ox, oy = px[~inside, None], py[~inside, None]
        out[~inside] = np.maximum(np.abs(ox - mx[None]), np.abs(oy - my[None])).min(axis=1)
    return out


def mask_refine(track: ObjectTrack, masks: Mapping[int, MaskRLE], tol_px: float = 2,
                frame_w: int = None, frame_h: int = None) -> np.ndarray:
    """Drop points that, on any masked frame where they are visible, lie
    farther than ``tol_px`` (Chebyshev) from every true mask pixel.

    ``masks`` maps clip-relative frame index to the mask on that frame.
    """
    keep = np.ones(track.num_points, dtype=bool)
    for f, m in sorted(masks.items()):
        if frame_w is not None and (m.width, m.height) != (frame_w, frame_h):
            raise ValidationError(f"mask at frame {f} is {m.width}x{m.height}, expected {frame_w}x{frame_h}")
        if not 0 <= f < track.num_frames:
            raise ValidationError(f"mask frame {f} outside clip of {track.num_frames} frames")
        vis = track.visible[:, f]
        if not vis.any():
            continue
        grid = rle_decode(m)
        d = _point_distance(grid, _distance_grid(grid), track.xy[:, f, 0], track.xy[:, f, 1])
        keep &= ~(vis & (d > tol_px))
    return keep


def rescale_track(track: ObjectTrack, src_w: int, src_h: int, dst_w: int, dst_h: int) -> ObjectTrack:
    """Map coordinates from a ``src`` resolution to a ``dst`` resolution."""
    s = np.array([dst_w / src_w, dst_h / src_h])
    return track.with_xy(track.xy * s, track.backtracked * s)

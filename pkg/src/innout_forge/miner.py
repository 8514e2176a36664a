"""Randomised box search for Frame In / Frame Out training instances.

A candidate box partitions a video frame into the in-box region (the first
frame seen by the model) and the canvas outside it. Objects are classified
against each box from their tracked points and first-frame mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

from .errors import ValidationError
from .rle import box_sums, crop_mask, integral_image, mask_area, mask_bbox, rle_decode, mask_box_overlap
from .types import CanvasBox, MaskRLE, ObjectTrack, PatternKind, PatternRecord, VideoRecord

DEFAULT_RATIO_TABLE = (
    # (w, h, probability, minimum height as a fraction of the frame height)
    (16, 9, 0.35, 0.60),
    (3, 2, 0.30, 0.60),
    (4, 3, 0.20, 0.65),
    (5, 4, 0.13, 0.65),
    (1, 1, 0.01, 0.75),
    (4, 5, 0.01, 0.85),
)


@dataclass(frozen=True)
class BoxSamplerConfig:
    ratio_table: tuple = DEFAULT_RATIO_TABLE
    attempts: int = 2000
    enter_fraction: float = 0.5
    max_patterns_per_starter: int = 4
    dedupe_iou: float = 0.9
    id_min_frac: float = 0.10

    def __post_init__(self):
        table = tuple(tuple(row) for row in self.ratio_table)
        object.__setattr__(self, "ratio_table", table)
        if abs(sum(r[2] for r in table) - 1.0) > 1e-9:
            raise ValidationError("ratio probabilities must sum to 1")
        if any(not 0 < r[3] <= 1 for r in table):
            raise ValidationError("min_height_frac must lie in (0, 1]")
        if not 0 < self.enter_fraction <= 1:
            raise ValidationError("enter_fraction must lie in (0, 1]")

    @property
    def ratios(self) -> np.ndarray:
        return np.array([w / h for w, h, _, _ in self.ratio_table])

    @property
    def probabilities(self) -> np.ndarray:
        p = np.array([r[2] for r in self.ratio_table], dtype=np.float64)
        return p / p.sum()

    def min_heights(self, frame_h: int) -> np.ndarray:
        return np.array([math.ceil(r[3] * frame_h - 1e-9) for r in self.ratio_table], dtype=np.int64)


@dataclass
class BoxBatch:
    category: np.ndarray
    x0: np.ndarray
    y0: np.ndarray
    x1: np.ndarray
    y1: np.ndarray
    accepted: np.ndarray

    def __len__(self):
        return len(self.category)

    def box(self, i: int) -> CanvasBox:
        return CanvasBox(int(self.x0[i]), int(self.y0[i]), int(self.x1[i]), int(self.y1[i]))


def sample_boxes(frame_w: int, frame_h: int, cfg: BoxSamplerConfig, rng: np.random.Generator, n: int) -> BoxBatch:
    """Draw ``n`` candidate boxes at once.

    Each draw picks a ratio category, an integer height uniform on
    [category minimum, frame_h], width = round(height * ratio) and a top-left
    corner uniform over the feasible positions. Draws whose width exceeds the
    frame are marked rejected.
    """
    if frame_w <= 0 or frame_h <= 0:
        raise ValidationError("frame dims must be positive")
    cat = rng.choice(len(cfg.ratio_table), size=n, p=cfg.probabilities)
    h = rng.integers(cfg.min_heights(frame_h)[cat], frame_h + 1)
    w = np.floor(h * cfg.ratios[cat] + 0.5).astype(np.int64)
    ok = (w <= frame_w) & (w >= 1)
    x0 = rng.integers(0, np.where(ok, frame_w - w, 0) + 1)
    y0 = rng.integers(0, frame_h - h + 1)
    return BoxBatch(cat, x0, y0, x0 + w, y0 + h, ok)


def sample_box(frame_w: int, frame_h: int, cfg: BoxSamplerConfig, rng: np.random.Generator) -> Optional[CanvasBox]:
    """One draw; None when the sampled box cannot fit in the frame."""
    b = sample_boxes(frame_w, frame_h, cfg, rng, 1)
    return b.box(0) if b.accepted[0] else None


def _inside(track: ObjectTrack, box: CanvasBox) -> np.ndarray:
    x, y = track.xy[..., 0], track.xy[..., 1]
    return (x >= box.x0) & (x < box.x1) & (y >= box.y0) & (y < box.y1) & track.visible


def frame_out_pattern(track: ObjectTrack, box: CanvasBox) -> bool:
    """Object starts at least partly inside ``box`` and later has every
    visible point outside it on some frame. Frames without visible points
    carry no evidence."""
    if not track.visible[:, 0].any():
        raise ValidationError(f"object {track.object_id}: no visible points at frame 0")
    inside = _inside(track, box)
    if not inside[:, 0].any():
        return False
    has_vis = track.visible.any(axis=0)
    return bool(np.any(has_vis & ~inside.any(axis=0)))


def frame_in_pattern(track: ObjectTrack, box: CanvasBox, first_frame_mask: MaskRLE,
                     cfg: BoxSamplerConfig = BoxSamplerConfig()) -> bool:
    """Object mask has no pixel in ``box`` at frame 0, and on some frame at
    least ``enter_fraction`` of the visible points are inside the box."""
    if first_frame_mask is None:
        raise ValidationError(f"object {track.object_id}: frame_in_pattern needs a first-frame mask")
    if mask_box_overlap(first_frame_mask, box) != 0:
        return False
    n_in = _inside(track, box).sum(axis=0)
    n_vis = track.visible.sum(axis=0)
    return bool(np.any((n_vis > 0) & (n_in >= cfg.enter_fraction * n_vis)))


@numba.njit(cache=True, nogil=True)
def _frame_extents(xs, ys, vis, out):
    """Per-frame (count, xmin, xmax, ymin, ymax) of the visible points."""
    n_pts, n_frames = xs.shape
    for f in range(n_frames):
        n = 0
        xmin = np.inf
        xmax = -np.inf
        ymin = np.inf
        ymax = -np.inf
        for p in range(n_pts):
            if vis[p, f]:
                n += 1
                xmin = min(xmin, xs[p, f])
                xmax = max(xmax, xs[p, f])
                ymin = min(ymin, ys[p, f])
                ymax = max(ymax, ys[p, f])
        out[f, 0] = n
        out[f, 1] = xmin
        out[f, 2] = xmax
        out[f, 3] = ymin
        out[f, 4] = ymax


@numba.njit(cache=True, nogil=True)
def _scan_boxes(x0, y0, x1, y1, accepted, xs, ys, vis, ext, enter_fraction, out_flags):
    """Per-box bit flags: 1 = frame-out on points, 2 = frame-in entry on points.

    ``ext`` holds the per-frame extents; frames whose visible points lie
    wholly outside or wholly inside a box skip the per-point loop.
    """
    n_pts, n_frames = xs.shape
    for a in range(x0.shape[0]):
        out_flags[a] = 0
        if not accepted[a]:
            continue
        bx0 = x0[a]
        by0 = y0[a]
        bx1 = x1[a]
        by1 = y1[a]
        start_inside = False
        for p in range(n_pts):
            if vis[p, 0]:
                x = xs[p, 0]
                y = ys[p, 0]
                if x >= bx0 and x < bx1 and y >= by0 and y < by1:
                    start_inside = True
                    break
        need_out = start_inside
        need_in = True
        for f in range(n_frames):
            if not (need_out or need_in):
                break
            n_vis = ext[f, 0]
            if n_vis == 0:
                continue
            if ext[f, 2] < bx0 or ext[f, 1] >= bx1 or ext[f, 4] < by0 or ext[f, 3] >= by1:
                n_in = 0.0
            elif ext[f, 1] >= bx0 and ext[f, 2] < bx1 and ext[f, 3] >= by0 and ext[f, 4] < by1:
                n_in = n_vis
            else:
                n_in = 0.0
                for p in range(n_pts):
                    if vis[p, f]:
                        x = xs[p, f]
                        y = ys[p, f]
                        if x >= bx0 and x < bx1 and y >= by0 and y < by1:
                            n_in += 1.0
            if need_out and n_in == 0:
                out_flags[a] |= 1
                need_out = False
            if need_in and n_in >= enter_fraction * n_vis:
                out_flags[a] |= 2
                need_in = False


def extract_id_crop(mask: MaskRLE, frame_w: int, frame_h: int, min_frac: float = 0.10):
    """(tight rect, cropped mask) of the identity, or None when its area is
    below ``min_frac`` of the frame area."""
    if mask_area(mask) == 0:
        raise ValidationError("extract_id_crop on an empty mask")
    if mask_area(mask) < min_frac * frame_w * frame_h:
        return None
    rect = mask_bbox(mask)
    return rect, crop_mask(mask, rect)


@dataclass
class _ObjectScan:
    track: ObjectTrack
    flags: np.ndarray
    frame_in_ok: np.ndarray
    id_crop: object = None


def _scan_object(track: ObjectTrack, boxes: BoxBatch, cfg: BoxSamplerConfig,
                 frame_w: int, frame_h: int) -> _ObjectScan:
    xs = np.ascontiguousarray(track.xy[..., 0])
    ys = np.ascontiguousarray(track.xy[..., 1])
    vis = np.ascontiguousarray(track.visible)
    ext = np.empty((xs.shape[1], 5), dtype=np.float64)
    _frame_extents(xs, ys, vis, ext)
    flags = np.empty(len(boxes), dtype=np.int8)
    _scan_boxes(boxes.x0, boxes.y0, boxes.x1, boxes.y1, boxes.accepted, xs, ys, vis, ext,
                cfg.enter_fraction, flags)
    if not track.visible[:, 0].any():
        flags &= ~np.int8(1)
    frame_in_ok = np.zeros(len(boxes), dtype=bool)
    crop = None
    m = track.first_frame_mask
    cand = (flags & 2) != 0
    if m is not None and cand.any():
        if (m.width, m.height) != (frame_w, frame_h):
            raise ValidationError(
                f"object {track.object_id}: mask is {m.width}x{m.height}, frame is {frame_w}x{frame_h}")
        if mask_area(m) > 0:
            crop = extract_id_crop(m, frame_w, frame_h, cfg.id_min_frac)
        if crop is not None:
            idx = np.flatnonzero(cand)
            sat = integral_image(rle_decode(m))
            overlap = box_sums(sat, boxes.x0[idx], boxes.y0[idx], boxes.x1[idx], boxes.y1[idx])
            frame_in_ok[idx[overlap == 0]] = True
    return _ObjectScan(track, flags, frame_in_ok, crop)


def mine_patterns(video: VideoRecord, starter: int, tracks: Sequence[ObjectTrack],
                  cfg: BoxSamplerConfig, rng: np.random.Generator) -> list:
    """Search ``cfg.attempts`` random boxes for Frame In / Frame Out pairings.

    Tracks must be in full-frame coordinates of ``video``. Boxes that overlap
    an already-kept box with IoU above ``cfg.dedupe_iou`` are skipped. An
    empty result means the (video, starter) clip is filtered.
    """
    frame_w, frame_h = video.width_px, video.height_px
    boxes = sample_boxes(frame_w, frame_h, cfg, rng, cfg.attempts)
    scans = [_scan_object(t, boxes, cfg, frame_w, frame_h)
             for t in sorted(tracks, key=lambda t: t.object_id)]
    if not scans:
        return []
    any_valid = np.zeros(len(boxes), dtype=bool)
    for s in scans:
        any_valid |= ((s.flags & 1) != 0) | s.frame_in_ok

    kept: list = []
    records: list = []
    provenance = {"enter_fraction": cfg.enter_fraction}
    for a in np.flatnonzero(any_valid).tolist():
        box = boxes.box(a)
        if any(box.iou(k) > cfg.dedupe_iou for k in kept):
            continue
        kept.append(box)
        for s in scans:
            base = dict(video_id=video.video_id, starter_frame=int(starter), box=box,
                        object_id=s.track.object_id)
            extra = dict(provenance, class_label=s.track.class_label, attempt=a)
            if s.flags[a] & 1:
                records.append(PatternRecord(kind=PatternKind.FRAME_OUT, extra=extra, **base))
            if s.frame_in_ok[a]:
                records.append(PatternRecord(kind=PatternKind.FRAME_IN, id_crop=s.id_crop,
                                             extra=extra, **base))
        if len(records) >= cfg.max_patterns_per_starter:
            break
    return records[: cfg.max_patterns_per_starter]

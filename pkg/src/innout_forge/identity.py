"""Starter-frame selection and object-of-interest screening."""

from __future__ import annotations

import bisect
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .rle import mask_area, rle_decode
from .types import MaskRLE, ObjectTrack

log = logging.getLogger(__name__)


def _load_class_file(name: str) -> frozenset:
    text = resources.files("innout_forge.data").joinpath(name).read_text(encoding="utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


@lru_cache(maxsize=None)
def motionable_classes() -> frozenset:
    return _load_class_file("motionable_classes.txt")


@lru_cache(maxsize=None)
def coco_panoptic_classes() -> frozenset:
    return _load_class_file("coco_panoptic_classes.txt")


@dataclass(frozen=True)
class IdentityConfig:
    motionable_classes: frozenset = field(default_factory=motionable_classes)
    min_area_frac: float = 0.04
    max_area_frac: float = 0.40
    max_same_label: int = 3
    starter_fracs: tuple = (0.0, 0.35, 0.70)
    iframe_snap_frac: float = 0.05
    kmeans_min: int = 12
    kmeans_max: int = 36
    clip_len: int = 49

    def __post_init__(self):
        object.__setattr__(self, "motionable_classes", frozenset(self.motionable_classes))
        object.__setattr__(self, "starter_fracs", tuple(self.starter_fracs))
        if not (0 < self.min_area_frac < self.max_area_frac < 1):
            raise ValidationError("need 0 < min_area_frac < max_area_frac < 1")
        if self.kmeans_min > self.kmeans_max:
            raise ValidationError("kmeans_min must not exceed kmeans_max")


def starter_frames(frame_count: int, iframes: Sequence[int], cfg: IdentityConfig = IdentityConfig(),
                   clip_len: Optional[int] = None) -> list:
    """Clip anchors at the configured fractions of the video, snapped to a
    nearby I-frame when one lies within ``iframe_snap_frac`` of the length.

    With ``clip_len`` set, anchors that leave fewer than ``clip_len`` frames
    before the end of the video are discarded.
    """
    if frame_count <= 0:
        raise ValidationError("starter_frames on an empty video")
    iframes = sorted(iframes)
    radius = cfg.iframe_snap_frac * frame_count
    out = set()
    for frac in cfg.starter_fracs:
        nominal = math.floor(frac * frame_count)
        chosen = nominal
        if iframes:
            j = bisect.bisect_left(iframes, nominal)
            near = [iframes[i] for i in (j - 1, j) if 0 <= i < len(iframes)]
            best = min(near, key=lambda f: (abs(f - nominal), f))
            if abs(best - nominal) <= radius:
                chosen = best
        if clip_len is not None and chosen + clip_len > frame_count:
            continue
        out.add(chosen)
    return sorted(out)


def motionable_filter(class_label: str, cfg: IdentityConfig = IdentityConfig()) -> bool:
    if class_label not in coco_panoptic_classes() and class_label not in cfg.motionable_classes:
        log.warning("unknown panoptic class label %r treated as static", class_label)
        return False
    return class_label in cfg.motionable_classes


def area_filter(area_frac: float, cfg: IdentityConfig = IdentityConfig()) -> bool:
    return cfg.min_area_frac <= area_frac <= cfg.max_area_frac


def mask_area_frac(mask: MaskRLE) -> float:
    return mask_area(mask) / (mask.width * mask.height)


def label_cap_filter(objects: Sequence, cfg: IdentityConfig = IdentityConfig()) -> bool:
    """True (keep) unless some label occurs more than ``max_same_label`` times.

    ``objects`` may hold ObjectTracks or plain label strings.
    """
    labels = Counter(o.class_label if isinstance(o, ObjectTrack) else str(o) for o in objects)
    return all(c <= cfg.max_same_label for c in labels.values())


def kmeans_point_count(area_frac: float, cfg: IdentityConfig = IdentityConfig()) -> int:
    """Linear map of the admissible area range onto [kmeans_min, kmeans_max]."""
    if not area_filter(area_frac, cfg):
        raise ValidationError(f"area fraction {area_frac} outside the admissible range")
    t = (area_frac - cfg.min_area_frac) / (cfg.max_area_frac - cfg.min_area_frac)
    k = math.floor(cfg.kmeans_min + t * (cfg.kmeans_max - cfg.kmeans_min) + 0.5)
    return min(cfg.kmeans_max, max(cfg.kmeans_min, k))


def _farthest_point_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = [int(rng.integers(len(pts)))]
    d2 = ((pts - pts[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        i = int(np.argmax(d2))
        idx.append(i)
        np.minimum(d2, ((pts - pts[i]) ** 2).sum(axis=1), out=d2)
    return pts[idx].copy()


def kmeans_sample(mask: MaskRLE, k: int, seed: int, max_iter: int = 50, tol_px: float = 0.5) -> np.ndarray:
    """k evenly spread query points on the mask, as a (k, 2) array of (x, y).

    Lloyd iterations on the mask pixel coordinates from a seeded
    farthest-point start; each centroid is then snapped to the nearest
    unused mask pixel so every point lies on the object.
    """
    grid = rle_decode(mask)
    ys, xs = np.nonzero(grid)
    if k <= 0:
        raise ValidationError("k must be positive")
    if len(xs) < k:
        raise ValidationError(f"mask has {len(xs)} pixels, fewer than k={k}")
    pts = np.column_stack([xs, ys]).astype(np.float64)
    rng = np.random.default_rng(seed)
    centers = _farthest_point_init(pts, k, rng)
    for _ in range(max_iter):
        _, label = cKDTree(centers).query(pts)
        sums = np.column_stack([np.bincount(label, weights=pts[:, 0], minlength=k),
                                np.bincount(label, weights=pts[:, 1], minlength=k)])
        counts = np.bincount(label, minlength=k)
        new = centers.copy()
        nz = counts > 0
        new[nz] = sums[nz] / counts[nz, None]
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift < tol_px:
            break

    tree = cKDTree(pts)
    taken = set()
    out = np.empty((k, 2), dtype=np.int64)
    for i, c in enumerate(centers):
        n_query = 1
        while True:
            _, nn = tree.query(c, k=min(n_query, len(pts)))
            nn = np.atleast_1d(nn)
            free = [j for j in nn.tolist() if j not in taken]
            if free:
                break
            n_query = min(2 * n_query + k, len(pts))
        j = free[0]
        taken.add(j)
        out[i] = pts[j]
    return out

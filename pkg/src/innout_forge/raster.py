"""Motion-condition rasters: tracked points drawn as dilated colour squares."""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .types import ObjectTrack

PALETTE_CAPACITY = 64
REFERENCE_HEIGHT = 384


@dataclass(frozen=True)
class MotionRasterConfig:
    box_side_base: float = 6.0
    dilation_kernel: int = 3
    dilation_iters: int = 1
    palette: Optional[tuple] = None

    def __post_init__(self):
        if self.box_side_base <= 0:
            raise ValidationError("box_side_base must be positive")
        if self.dilation_kernel < 1 or self.dilation_kernel % 2 == 0:
            raise ValidationError("dilation kernel must be a positive odd integer")
        if self.dilation_iters < 0:
            raise ValidationError("dilation_iters must be non-negative")


def palette_for_objects(n: int) -> np.ndarray:
    """``n`` fully saturated colours with evenly spaced hues, as (n, 3) uint8."""
    if n < 1:
        raise ValidationError("palette needs at least one colour")
    if n > PALETTE_CAPACITY:
        raise ValidationError(f"palette capacity is {PALETTE_CAPACITY} colours")
    rgb = [colorsys.hsv_to_rgb(i / n, 1.0, 1.0) for i in range(n)]
    return np.array([[int(round(c * 255)) for c in col] for col in rgb], dtype=np.uint8)


def marker_side(frame_h: int, cfg: MotionRasterConfig = MotionRasterConfig()) -> int:
    return max(1, int(np.floor(cfg.box_side_base * frame_h / REFERENCE_HEIGHT + 0.5)))


def _paint_squares(layer: np.ndarray, xs: np.ndarray, ys: np.ndarray, side: int) -> None:
    h, w = layer.shape
    # rounded centre, ties toward the top-left
    cx = np.ceil(xs - 0.5).astype(np.int64)
    cy = np.ceil(ys - 0.5).astype(np.int64)
    x0 = cx - side // 2
    y0 = cy - side // 2
    for a, b in zip(x0.tolist(), y0.tolist()):
        xa, xb = max(a, 0), min(a + side, w)
        ya, yb = max(b, 0), min(b + side, h)
        if xa < xb and ya < yb:
            layer[ya:yb, xa:xb] = True


def rasterize_motion_index(tracks: Sequence[ObjectTrack], frame_w: int, frame_h: int, frame_count: int,
                           cfg: MotionRasterConfig = MotionRasterConfig(),
                           scale_height: Optional[int] = None) -> np.ndarray:
    """Per-frame object-index raster of shape (F, H, W), int16.

    0 is background; object ``i`` (ordered by object_id) is painted as
    ``i + 1``. Later objects overwrite earlier ones where they overlap.
    ``scale_height`` sets the height the marker size scales with and
    defaults to ``frame_h``.
    """
    if frame_w <= 0 or frame_h <= 0 or frame_count <= 0:
        raise ValidationError("raster dims must be positive")
    side = marker_side(scale_height or frame_h, cfg)
    structure = np.ones((cfg.dilation_kernel, cfg.dilation_kernel), dtype=bool)
    out = np.zeros((frame_count, frame_h, frame_w), dtype=np.int16)
    layer = np.zeros((frame_h, frame_w), dtype=bool)
    ordered = sorted(tracks, key=lambda t: t.object_id)
    for idx, track in enumerate(ordered, start=1):
        for f in range(min(frame_count, track.num_frames)):
            vis = track.visible[:, f]
            if not vis.any():
                continue
            layer[:] = False
            _paint_squares(layer, track.xy[vis, f, 0], track.xy[vis, f, 1], side)
            if cfg.dilation_iters > 0:
                grown = ndimage.binary_dilation(layer, structure=structure, iterations=cfg.dilation_iters)
            else:
                grown = layer
            out[f][grown] = idx
    return out


def colorize(index_raster: np.ndarray, palette: np.ndarray) -> np.ndarray:
    lut = np.zeros((len(palette) + 1, 3), dtype=np.uint8)
    lut[1:] = palette
    return lut[index_raster]


def rasterize_motion(tracks: Sequence[ObjectTrack], frame_w: int, frame_h: int, frame_count: int,
                     cfg: MotionRasterConfig = MotionRasterConfig(),
                     scale_height: Optional[int] = None) -> np.ndarray:
    """RGB motion raster of shape (F, H, W, 3) with a black background."""
    index = rasterize_motion_index(tracks, frame_w, frame_h, frame_count, cfg, scale_height)
    n = max(1, len(tracks))
    palette = np.asarray(cfg.palette, dtype=np.uint8) if cfg.palette is not None else palette_for_objects(n)
    if len(palette) < len(tracks):
        raise ValidationError("configured palette has fewer colours than objects")
    return colorize(index, palette)


def drop_points(tracks: Sequence[ObjectTrack], drop_prob: float, rng: np.random.Generator) -> list:
    """Drop each point independently with ``drop_prob``; every object keeps
    at least its lowest-id point."""
    if not 0.0 <= drop_prob < 1.0:
        raise ValidationError("drop_prob must lie in [0, 1)")
    out = []
    for t in sorted(tracks, key=lambda t: t.object_id):
        keep = rng.random(t.num_points) >= drop_prob
        if not keep.any():
            keep[int(np.argmin(t.point_ids))] = True
        out.append(t if keep.all() else t.subset(keep))
    return out


def write_ppm(path, rgb: np.ndarray) -> None:
    """Binary 24-bit PPM (P6) for one (H, W, 3) uint8 frame."""
    h, w, _ = rgb.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P6" or int(fields[3]) != 255:
        raise ValidationError(f"{path}: only 8-bit binary PPM is supported")
    w, h = int(fields[1]), int(fields[2])
    # exactly one whitespace byte separates the header from the pixels
    return np.frombuffer(data[pos + 1: pos + 1 + w * h * 3], dtype=np.uint8).reshape(h, w, 3)

"""Conditioning-tensor layout plan and position-embedding utilities.

The model input per latent frame is the channel concatenation
``[noisy latent | encoded first frame | encoded motion]``. An identity
reference, when present, is appended as one extra latent frame laid out as
``[encoded identity | zeros | zeros]`` and reuses the position indices of the
first video frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .types import CanvasSpec


@dataclass(frozen=True)
class LayoutDescriptor:
    latent_frames: int
    latent_h: int
    latent_w: int
    channel_slices: dict
    compression: tuple
    pe_index_map: tuple
    zero_slices: tuple
    id_frame_index: Optional[int] = None
    id_frame_slices: dict = field(default_factory=dict)
    token_order: tuple = ("text", "video")
    canvas: Optional[CanvasSpec] = None
    pixel_frames: int = 0
    id_noise_sigma: float = 0.0

    @property
    def total_channels(self) -> int:
        return max(stop for _, stop in self.channel_slices.values())

    @property
    def total_frames(self) -> int:
        return self.latent_frames + (1 if self.id_frame_index is not None else 0)

    def to_dict(self) -> dict:
        return {
            "latent_frames": self.latent_frames,
            "latent_h": self.latent_h,
            "latent_w": self.latent_w,
            "total_frames": self.total_frames,
            "total_channels": self.total_channels,
            "channel_slices": {k: list(v) for k, v in self.channel_slices.items()},
            "compression": list(self.compression),
            "pe_index_map": [list(t) for t in self.pe_index_map],
            "zero_slices": [dict(z) for z in self.zero_slices],
            "id_frame_index": self.id_frame_index,
            "id_frame_slices": {k: list(v) for k, v in self.id_frame_slices.items()},
            "token_order": list(self.token_order),
            "canvas": None if self.canvas is None else self.canvas.to_dict(),
            "pixel_frames": self.pixel_frames,
            "id_noise_sigma": self.id_noise_sigma,
        }


def plan_conditioning_layout(spec: CanvasSpec, pixel_frames: int, compression: tuple, channels: tuple,
                             has_id: bool, id_noise_sigma: float = 0.0) -> LayoutDescriptor:
    t_c, s_c = compression
    c_z, c_i, c_m = channels
    if t_c <= 0 or s_c <= 0 or min(channels) <= 0:
        raise ValidationError("compression factors and channel counts must be positive")
    if pixel_frames < 1 or (pixel_frames - 1) % t_c:
        raise ValidationError(f"pixel_frames - 1 = {pixel_frames - 1} is not divisible by {t_c}")
    if spec.canvas_h % s_c or spec.canvas_w % s_c:
        raise ValidationError(f"canvas {spec.canvas_w}x{spec.canvas_h} is not divisible by {s_c}")
    if has_id and c_i > c_z:
        raise ValidationError("identity latent must fit in the noisy-latent channel slot")
    t = 1 + (pixel_frames - 1) // t_c
    slices = {
        "noisy_latent": (0, c_z),
        "first_frame": (c_z, c_z + c_i),
        "motion": (c_z + c_i, c_z + c_i + c_m),
    }
    zero = []
    if t > 1:
        # the single encoded first frame is zero-padded along time
        zero.append({"frames": [1, t], "channels": "first_frame"})
    pe = [(f, 0, 0) for f in range(t)]
    id_index = None
    id_slices = {}
    order = ("text", "video")
    if has_id:
        id_index = t
        pe.append(pe[0])
        id_slices = {"id_reference": (0, c_i)}
        if c_i < c_z:
            id_slices["zero"] = (c_i, c_z)
        zero.append({"frames": [t, t + 1], "channels": "first_frame"})
        zero.append({"frames": [t, t + 1], "channels": "motion"})
        order = ("text", "video", "id")
    return LayoutDescriptor(
        latent_frames=t,
        latent_h=spec.canvas_h // s_c,
        latent_w=spec.canvas_w // s_c,
        channel_slices=slices,
        compression=(t_c, s_c),
        pe_index_map=tuple(pe),
        zero_slices=tuple(zero),
        id_frame_index=id_index,
        id_frame_slices=id_slices,
        token_order=order,
        canvas=spec,
        pixel_frames=pixel_frames,
        id_noise_sigma=id_noise_sigma,
    )


def expand_projector_weights(old: np.ndarray, c_new: int) -> np.ndarray:
    """Widen an (out, c_old) input projector to ``c_new`` input channels,
    zero-filling the new columns so the original mapping is unchanged."""
    old = np.asarray(old)
    if old.ndim != 2:
        raise ValidationError("projector weights must be a 2-D matrix")
    c_old = old.shape[1]
    if c_new < c_old:
        raise ValidationError(f"c_new={c_new} is smaller than c_old={c_old}")
    out = np.zeros((old.shape[0], c_new), dtype=old.dtype)
    out[:, :c_old] = old
    return out


def _resize_axis(a: np.ndarray, axis: int, n_new: int) -> np.ndarray:
    n = a.shape[axis]
    if n_new == n:
        return a
    if n == 1:
        return np.repeat(a, n_new, axis=axis)
    # align-corners: source endpoints land on target endpoints
    pos = np.linspace(0.0, n - 1, n_new) if n_new > 1 else np.zeros(1)
    i0 = np.clip(np.floor(pos).astype(np.int64), 0, n - 2)
    frac = pos - i0
    shape = [1] * a.ndim
    shape[axis] = n_new
    frac = frac.reshape(shape)
    lo = np.take(a, i0, axis=axis)
    hi = np.take(a, i0 + 1, axis=axis)
    return lo * (1.0 - frac) + hi * frac


def interpolate_abs_pe(grid: np.ndarray, target: tuple) -> np.ndarray:
    """Trilinear resize of a (T, H, W, D) embedding grid to (T', H', W', D)."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 4 or min(grid.shape) < 1 or min(target) < 1:
        raise ValidationError("grid must be (T, H, W, D) and target dims positive")
    out = grid
    for axis, n_new in enumerate(target):
        out = _resize_axis(out, axis, int(n_new))
    return out


def rope_position_grid(spec: CanvasSpec, latent_dims: tuple, has_id: bool = False) -> np.ndarray:
    """Integer (t, y, x) index per latent position, shape (T[+1], H, W, 3).

    Index (0, 0, 0) is the canvas top-left on the first frame; an identity
    frame repeats the first frame's indices.
    """
    t, h, w = latent_dims
    if min(t, h, w) <= 0:
        raise ValidationError("latent dims must be positive")
    tt, yy, xx = np.meshgrid(np.arange(t), np.arange(h), np.arange(w), indexing="ij")
    grid = np.stack([tt, yy, xx], axis=-1).astype(np.int64)
    if has_id:
        grid = np.concatenate([grid, grid[:1]], axis=0)
    return grid

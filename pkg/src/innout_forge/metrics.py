"""Evaluation metrics over ingested trajectories, masks, embeddings and
vision-language judgments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .canvas import canvas_expand_track
from .errors import ValidationError
from .rle import rle_decode
from .types import CanvasSpec, EmbeddingVec, MaskRLE, ObjectTrack


def pad_coords_to_canvas(tracks: Sequence[ObjectTrack], spec: CanvasSpec) -> list:
    """Shift first-frame coordinates into canvas coordinates.

    Not idempotent: applying it twice shifts twice.
    """
    return [canvas_expand_track(spec, t) for t in tracks]


def _index_points(tracks: Sequence[ObjectTrack]) -> dict:
    out = {}
    for t in tracks:
        for i, pid in enumerate(t.point_ids.tolist()):
            out[(t.object_id, pid)] = (t.xy[i], t.visible[i])
    return out


def trajectory_error(gt_tracks: Sequence[ObjectTrack], gen_tracks: Sequence[ObjectTrack]) -> float:
    """Mean Euclidean distance over point/frame pairs visible in both sets."""
    gt = _index_points(gt_tracks)
    gen = _index_points(gen_tracks)
    if gt.keys() != gen.keys():
        raise ValidationError("gt and generated tracks do not share the same (object_id, point_id) set")
    total = 0.0
    count = 0
    for key in sorted(gt):
        (xy_a, vis_a), (xy_b, vis_b) = gt[key], gen[key]
        if len(xy_a) != len(xy_b):
            raise ValidationError(f"point {key}: frame counts differ")
        both = vis_a & vis_b
        total += float(np.hypot(*(xy_a[both] - xy_b[both]).T).sum())
        count += int(both.sum())
    if count == 0:
        raise ValidationError("no mutually visible point pairs")
    return total / count


def _as_mask_stack(masks) -> np.ndarray:
    if isinstance(masks, np.ndarray):
        return masks.astype(bool)
    return np.stack([rle_decode(m) if isinstance(m, MaskRLE) else np.asarray(m, dtype=bool)
                     for m in masks])


def vseg_mae(gt_masks, gen_masks) -> float:
    """Mean absolute per-pixel difference of two (F, H, W) mask sequences."""
    a = _as_mask_stack(gt_masks)
    b = _as_mask_stack(gen_masks)
    if a.shape != b.shape or a.ndim != 3 or a.size == 0:
        raise ValidationError(f"mask sequences differ in shape: {a.shape} vs {b.shape}")
    return float(np.count_nonzero(a != b)) / a.size


def _unit_rows(embs: Sequence) -> np.ndarray:
    return np.stack([(e if isinstance(e, EmbeddingVec) else EmbeddingVec(e)).normalized().values
                     for e in embs])


def relative_dino(id_emb, gen_embs: Sequence, gt_embs: Sequence, eps: float = 1e-6) -> float:
    """|mean cos(id, gen_t) - mean cos(id, gt_t)| / mean cos(id, gt_t)."""
    if len(gen_embs) != len(gt_embs) or len(gt_embs) == 0:
        raise ValidationError("generated and gt embedding lists must be equally long and non-empty")
    d_id = _unit_rows([id_emb])[0]
    gen = _unit_rows(gen_embs)
    gt = _unit_rows(gt_embs)
    if gen.shape[1] != d_id.size or gt.shape[1] != d_id.size:
        raise ValidationError("embedding dims differ")
    s_gen = float((gen @ d_id).mean())
    s_gt = float((gt @ d_id).mean())
    if abs(s_gt) <= eps:
        raise ValidationError("ground-truth similarity is ~0; relative DINO undefined")
    return abs(s_gen - s_gt) / s_gt


def vlm_correctness(gen_judgments: Sequence[bool], gt_judgments: Sequence[bool]) -> float:
    """Fraction of prompts where the judgment on the generated video matches
    the judgment on the ground-truth video."""
    if len(gen_judgments) != len(gt_judgments) or not gt_judgments:
        raise ValidationError("judgment lists must be equally long and non-empty")
    return sum(bool(a) == bool(b) for a, b in zip(gen_judgments, gt_judgments)) / len(gt_judgments)


@dataclass(frozen=True)
class JudgmentRequest:
    video_id: str
    frames_ref: str
    instruction: str


class JudgmentProvider(Protocol):
    """External vision-language service answering yes/no about a video."""

    def judge(self, request: JudgmentRequest) -> bool: ...


def collect_judgments(provider: JudgmentProvider, requests: Sequence[JudgmentRequest]) -> list:
    return [bool(provider.judge(r)) for r in requests]

"""Stage orchestration, seeding, parallel execution and filtering statistics.

Each stage consumes a manifest of VideoRecords and writes
``<stage>.jsonl`` (survivors, sorted by video_id), ``<stage>.rejects.jsonl``
(records with ``drop_reason`` set) and any side manifests, then appends a
StageReport to ``stats.jsonl``. Per-video work is farmed out to a process
pool; results are merged in input order so output does not depend on the
worker count.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .config import PipelineConfig, write_resolved
from .curation import (PercentileRule, Tail, basic_filter, camera_series_stats, camera_window,
                       percentile_filter, scene_filter)
from .cycle import mask_refine, motion_stats, object_viability, rescale_track, roundtrip_filter
from .errors import StageError, ValidationError
from .identity import (area_filter, kmeans_point_count, kmeans_sample, label_cap_filter,
                       mask_area_frac, motionable_filter, starter_frames)
from .manifest import manifest_append, manifest_read, manifest_write, read_typed
from .miner import mine_patterns
from .types import MaskRLE, ObjectTrack, PoseSample, VideoRecord

log = logging.getLogger(__name__)


def video_seed(global_seed: int, *keys) -> int:
    """64-bit seed mixed from the global seed and per-item keys."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(global_seed)).encode())
    for k in keys:
        h.update(b"\x1f")
        h.update(str(k).encode())
    return int.from_bytes(h.digest(), "little")


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class StageReport:
    stage_name: str
    input_count: int
    output_count: int
    initial_count: int

    def __post_init__(self):
        if not 0 <= self.output_count <= self.input_count:
            raise ValidationError(f"{self.stage_name}: output count exceeds input count")

    @property
    def left_ratio(self) -> float:
        return 100.0 * self.output_count / self.initial_count if self.initial_count else 0.0

    def to_dict(self) -> dict:
        return {
            "stage_name": self.stage_name,
            "input_count": self.input_count,
            "output_count": self.output_count,
            "initial_count": self.initial_count,
            "left_ratio": round(self.left_ratio, 6),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StageReport":
        return cls(d["stage_name"], int(d["input_count"]), int(d["output_count"]), int(d["initial_count"]))


def format_count(n: int) -> str:
    """Compact count in the style of the filtering table: 1.00M, 1.276M, 537K, 29.7K."""
    if n >= 1_000_000:
        s = f"{n / 1e6:.3f}"
        if s.endswith("0"):
            s = s[:-1]
        return s + "M"
    if n >= 1_000:
        s = f"{n / 1e3:.1f}"
        if s.endswith(".0"):
            s = s[:-2]
        return s + "K"
    return str(n)


def format_ratio(r: float) -> str:
    return f"{r:.1f}%"


def stats_report(reports) -> str:
    """Table of (stage, count, left ratio) rows, preceded by the initial pool."""
    reports = list(reports)
    if not reports:
        return ""
    initials = {r.initial_count for r in reports}
    if len(initials) != 1:
        raise ValidationError(f"stage reports disagree on the initial count: {sorted(initials)}")
    initial = initials.pop()
    rows = [("Initial", format_count(initial), format_ratio(100.0 if initial else 0.0))]
    rows += [(r.stage_name, format_count(r.output_count), format_ratio(r.left_ratio)) for r in reports]
    width = max(len(r[0]) for r in rows)
    return "\n".join(f"{name:<{width}}  {count:>8}  {ratio:>7}" for name, count, ratio in rows)


# ---------------------------------------------------------------------------
# stage plumbing


@dataclass
class StageContext:
    config: PipelineConfig
    seed: int = 0
    workers: int = 1
    paths: dict = field(default_factory=dict)


@dataclass
class StageOutcome:
    kept: list
    rejected: list
    side: dict = field(default_factory=dict)


def _drop(r: VideoRecord, reason: str) -> VideoRecord:
    return dataclasses.replace(r, drop_reason=reason)


def _pmap(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _split(records, reasons) -> StageOutcome:
    kept, rejected = [], []
    for r, why in zip(records, reasons):
        if why is None:
            kept.append(r)
        else:
            rejected.append(_drop(r, why))
    return StageOutcome(kept, rejected)


def _group_by_video(path, ids: set) -> dict:
    out = defaultdict(list)
    for rec in manifest_read(path):
        vid = rec.get("video_id")
        if vid in ids:
            out[vid].append(rec)
    return out


def _require(ctx: StageContext, key: str, stage: str) -> Path:
    p = ctx.paths.get(key)
    if p is None or not Path(p).exists():
        raise StageError(stage, f"missing {key} file ({p})", io=True)
    return Path(p)


# ---------------------------------------------------------------------------
# stages


def stage_basic(records, ctx: StageContext) -> StageOutcome:
    cfg = ctx.config.basic
    reasons = []
    for r in records:
        why = basic_filter(r, cfg)
        reasons.append(None if why is None else f"basic:{why}")
    return _split(records, reasons)


def stage_scores(records, ctx: StageContext) -> StageOutcome:
    """Percentile cuts per metric over the stage's input population,
    grouped by dataset tag; a record is dropped if any rule drops it."""
    why = {}
    by_tag = defaultdict(list)
    for r in records:
        by_tag[r.dataset_tag].append(r)
    for tag in sorted(by_tag):
        group = by_tag[tag]
        for metric, rule in ctx.config.score_rules(tag).items():
            missing = [r.video_id for r in group if metric not in r.scores]
            if missing:
                raise ValidationError(f"videos {missing[:5]} lack score {metric!r}")
            for vid in sorted(percentile_filter([(r.video_id, r.scores[metric]) for r in group], rule)):
                why.setdefault(vid, f"scores:{metric}")
    return _split(records, [why.get(r.video_id) for r in records])


def stage_scene(records, ctx: StageContext) -> StageOutcome:
    return _split(records, [None if scene_filter(r) is None else "scene:multi-scene" for r in records])


def _identity_worker(item, cfg: PipelineConfig, seed: int):
    rec, segments = item
    icfg = cfg.identity
    starters = starter_frames(rec.frame_count, rec.iframe_indices, icfg, clip_len=icfg.clip_len)
    if not starters:
        return "identity:no-starter", []
    by_frame = defaultdict(list)
    for s in segments:
        by_frame[int(s["frame_index"])].append(s)
    rows = []
    for st in starters:
        chosen = []
        for seg in sorted(by_frame.get(st, []), key=lambda s: int(s["object_id"])):
            mask = MaskRLE.from_dict(seg["mask"])
            frac = mask_area_frac(mask)
            if motionable_filter(seg["class_label"], icfg) and area_filter(frac, icfg):
                chosen.append((seg, mask, frac))
        if not label_cap_filter([c[0]["class_label"] for c in chosen], icfg):
            return "identity:label-cap", []
        for seg, mask, frac in chosen:
            oid = int(seg["object_id"])
            k = kmeans_point_count(frac, icfg)
            pts = kmeans_sample(mask, k, video_seed(seed, rec.video_id, st, oid))
            rows.append({
                "video_id": rec.video_id,
                "starter_frame": st,
                "object_id": oid,
                "class_label": seg["class_label"],
                "area_frac": frac,
                "query_points": pts.tolist(),
            })
    if not rows:
        return "identity:no-objects", []
    return None, rows


def stage_identity(records, ctx: StageContext) -> StageOutcome:
    path = _require(ctx, "segments", "identity")
    segs = _group_by_video(path, {r.video_id for r in records})
    results = _pmap(partial(_identity_worker, cfg=ctx.config, seed=ctx.seed),
                    [(r, segs.get(r.video_id, [])) for r in records], ctx.workers)
    out = _split(records, [why for why, _ in results])
    out.side["identities.jsonl"] = [row for why, rows in results if why is None for row in rows]
    return out


def _camera_worker(item, cfg: PipelineConfig):
    rec, rows = item
    poses = camera_window([PoseSample.from_dict(p) for p in rows], cfg.camera.window_s, cfg.camera.sample_fps)
    if len(poses) < 2:
        return None
    s = camera_series_stats(poses)
    return s.rotation_err, s.translation_err, s.focal_change


def stage_camera(records, ctx: StageContext) -> StageOutcome:
    path = _require(ctx, "poses", "camera")
    poses = _group_by_video(path, {r.video_id for r in records})
    stats = _pmap(partial(_camera_worker, cfg=ctx.config),
                  [(r, poses.get(r.video_id, [])) for r in records], ctx.workers)
    why = {r.video_id: "camera:no-poses" for r, s in zip(records, stats) if s is None}
    ccfg = ctx.config.camera
    rules = [
        PercentileRule("rotation", Tail.HIGH, high_fraction=ccfg.rot_high),
        PercentileRule("translation", Tail.HIGH, high_fraction=ccfg.trans_high),
        PercentileRule("focal", Tail.HIGH, high_fraction=ccfg.focal_high),
    ]
    by_tag = defaultdict(list)
    for r, s in zip(records, stats):
        if s is not None:
            by_tag[r.dataset_tag].append((r.video_id, s))
    for tag in sorted(by_tag):
        group = by_tag[tag]
        for i, rule in enumerate(rules):
            for vid in sorted(percentile_filter([(vid, s[i]) for vid, s in group], rule)):
                why.setdefault(vid, f"camera:{rule.metric_name}")
    return _split(records, [why.get(r.video_id) for r in records])


def _cycle_worker(item, cfg: PipelineConfig):
    rec, rows, selected = item
    ccfg = cfg.cycle
    out = []
    for row in sorted(rows, key=lambda d: (int(d["starter_frame"]), int(d["object_id"]))):
        st, oid = int(row["starter_frame"]), int(row["object_id"])
        if selected is not None and (st, oid) not in selected:
            continue
        track = ObjectTrack.from_dict({k: v for k, v in row.items() if k not in ("video_id", "starter_frame")})
        keep = roundtrip_filter(track, ccfg.track_h, ccfg.threshold_frac)
        if not object_viability(track.num_points, int(keep.sum()), ccfg.viability_frac):
            continue
        kept = track.subset(keep)
        try:
            mean_step, max_step = motion_stats(kept, ccfg.track_h)
        except ValidationError:
            continue
        out.append((st, kept, mean_step, max_step))
    return out


def stage_cycle(records, ctx: StageContext) -> StageOutcome:
    path = _require(ctx, "tracks", "cycle")
    tracks = _group_by_video(path, {r.video_id for r in records})
    selected = None
    ident = ctx.paths.get("identities")
    if ident is not None and Path(ident).exists():
        selected = defaultdict(set)
        for row in manifest_read(ident):
            selected[row["video_id"]].add((int(row["starter_frame"]), int(row["object_id"])))
    items = [(r, tracks.get(r.video_id, []),
              None if selected is None else selected.get(r.video_id, set())) for r in records]
    results = _pmap(partial(_cycle_worker, cfg=ctx.config), items, ctx.workers)

    ccfg = ctx.config.cycle
    keyed = {}
    for r, objs in zip(records, results):
        for st, t, mean_step, max_step in objs:
            keyed[f"{r.video_id}/{st}/{t.object_id}"] = (mean_step, max_step)
    dropped = set()
    if keyed:
        values = sorted(keyed.items())
        dropped |= percentile_filter([(k, v[0]) for k, v in values],
                                     PercentileRule("mean_step", Tail.LOW, low_fraction=ccfg.motion_low))
        dropped |= percentile_filter([(k, v[1]) for k, v in values],
                                     PercentileRule("max_step", Tail.HIGH, high_fraction=ccfg.motion_high))
    side, reasons = [], []
    for r, objs in zip(records, results):
        survivors = [(st, t) for st, t, _, _ in objs if f"{r.video_id}/{st}/{t.object_id}" not in dropped]
        reasons.append(None if survivors else "cycle:no-objects")
        for st, t in survivors:
            side.append(dict(t.to_dict(), video_id=r.video_id, starter_frame=st))
    out = _split(records, reasons)
    out.side["cycle_tracks.jsonl"] = side
    return out


def _innout_worker(item, cfg: PipelineConfig, seed: int):
    rec, track_rows, segment_rows, mask_rows = item
    ccfg = cfg.cycle
    first_masks = {(int(s["frame_index"]), int(s["object_id"])): s["mask"] for s in segment_rows}
    clip_masks = defaultdict(dict)
    for m in mask_rows:
        clip_masks[(int(m["starter_frame"]), int(m["object_id"]))][int(m["frame_index"])] = \
            MaskRLE.from_dict(m["mask"])
    by_starter = defaultdict(list)
    for row in track_rows:
        st = int(row["starter_frame"])
        t = ObjectTrack.from_dict({k: v for k, v in row.items() if k not in ("video_id", "starter_frame")})
        t = rescale_track(t, ccfg.track_w, ccfg.track_h, rec.width_px, rec.height_px)
        mask = clip_masks.get((st, t.object_id), {}).get(0)
        if mask is None and (st, t.object_id) in first_masks:
            mask = MaskRLE.from_dict(first_masks[(st, t.object_id)])
        if mask is None:
            mask = t.first_frame_mask
        t.first_frame_mask = mask
        by_starter[st].append(t)
    patterns = []
    for st in sorted(by_starter):
        rng = np.random.default_rng(video_seed(seed, rec.video_id, st))
        tracks = {t.object_id: t for t in by_starter[st]}
        for p in mine_patterns(rec, st, list(tracks.values()), cfg.innout, rng):
            track = tracks[p.object_id]
            refine = clip_masks.get((st, p.object_id), {})
            keep = mask_refine(track, refine, ccfg.mask_tol_px, rec.width_px, rec.height_px)
            extra = dict(p.extra, point_ids=track.point_ids[keep].tolist())
            patterns.append(dataclasses.replace(p, extra=extra).to_dict())
    return ("innout:no-pattern" if not patterns else None), patterns


def stage_innout(records, ctx: StageContext) -> StageOutcome:
    key = "cycle_tracks" if ctx.paths.get("cycle_tracks") else "tracks"
    path = _require(ctx, key, "innout")
    ids = {r.video_id for r in records}
    tracks = _group_by_video(path, ids)
    segs = _group_by_video(ctx.paths["segments"], ids) if ctx.paths.get("segments") else {}
    masks = _group_by_video(ctx.paths["masks"], ids) if ctx.paths.get("masks") else {}
    items = [(r, tracks.get(r.video_id, []), segs.get(r.video_id, []), masks.get(r.video_id, []))
             for r in records]
    results = _pmap(partial(_innout_worker, cfg=ctx.config, seed=ctx.seed), items, ctx.workers)
    out = _split(records, [why for why, _ in results])
    out.side["patterns.jsonl"] = [p for _, ps in results for p in ps]
    return out


STAGES = {
    "basic": stage_basic,
    "image-scores": stage_scores,
    "scene": stage_scene,
    "identity": stage_identity,
    "camera": stage_camera,
    "cycle": stage_cycle,
    "innout": stage_innout,
}

STAGE_LABELS = {
    "basic": "Basic Filter",
    "image-scores": "Image Scoring",
    "scene": "Scene Cut",
    "identity": "Panoptic Seg.",
    "camera": "Camera Filter",
    "cycle": "Motion Filter",
    "innout": "In-N-Out Filter",
}


def stage_order(cfg: PipelineConfig) -> list:
    if cfg.run.camera_before_identity:
        return ["basic", "image-scores", "scene", "camera", "identity", "cycle", "innout"]
    return ["basic", "image-scores", "scene", "identity", "camera", "cycle", "innout"]


def _prior_initial(stats_path: Path, default: int) -> int:
    """Initial count of an earlier stage run into the same directory."""
    if not stats_path.exists():
        return default
    for row in manifest_read(stats_path):
        return int(row["initial_count"])
    return default


def run_stage(stage_name: str, in_path, out_dir, ctx: StageContext,
              initial_count: Optional[int] = None):
    """Run one stage on a manifest; returns (output manifest path, StageReport)."""
    if stage_name not in STAGES:
        raise ValidationError(f"unknown stage {stage_name!r}; known: {', '.join(STAGES)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = sorted(read_typed(in_path, VideoRecord), key=lambda r: r.video_id)
    for r in records:
        r.validate()
    try:
        outcome = STAGES[stage_name](records, ctx)
    except StageError:
        raise
    except ValidationError as e:
        raise StageError(stage_name, str(e)) from e
    except OSError as e:
        raise StageError(stage_name, str(e), io=True) from e
    kept = sorted(outcome.kept, key=lambda r: r.video_id)
    rejected = sorted(outcome.rejected, key=lambda r: r.video_id)
    assert len(kept) + len(rejected) == len(records)
    out_path = out_dir / f"{stage_name}.jsonl"
    manifest_write(out_path, kept)
    manifest_write(out_dir / f"{stage_name}.rejects.jsonl", rejected)
    for name, rows in outcome.side.items():
        manifest_write(out_dir / name, rows)
        ctx.paths[Path(name).stem] = str(out_dir / name)
    if initial_count is None:
        initial_count = _prior_initial(out_dir / "stats.jsonl", len(records))
    report = StageReport(stage_name, len(records), len(kept), initial_count)
    manifest_append(out_dir / "stats.jsonl", [report])
    log.info("%s: %d -> %d", stage_name, len(records), len(kept))
    return out_path, report


def run_all(cfg: PipelineConfig, out_dir, seed: Optional[int] = None, workers: Optional[int] = None):
    """Run every stage in order; returns (patterns manifest path, reports)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = out_dir / "stats.jsonl"
    if stats.exists():
        stats.unlink()
    for stale in ("identities.jsonl", "cycle_tracks.jsonl", "patterns.jsonl"):
        (out_dir / stale).unlink(missing_ok=True)
    write_resolved(cfg, out_dir / "resolved_config.json")
    paths = {k: v for k, v in dataclasses.asdict(cfg.inputs).items() if v is not None}
    if "videos" not in paths or not Path(paths["videos"]).exists():
        raise StageError("basic", f"missing videos manifest ({paths.get('videos')})", io=True)
    ctx = StageContext(cfg, cfg.run.seed if seed is None else seed,
                       cfg.run.workers if workers is None else workers, paths)
    current = Path(paths["videos"])
    initial = sum(1 for _ in manifest_read(current))
    reports = []
    for name in stage_order(cfg):
        current, report = run_stage(name, current, out_dir, ctx, initial_count=initial)
        reports.append(report)
    return out_dir / "patterns.jsonl", reports

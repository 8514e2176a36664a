"""``innout-forge`` command line.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import canvas as canvas_ops
from .config import load_config
from .errors import StageError, ValidationError
from .layout import plan_conditioning_layout
from .manifest import manifest_read, manifest_write
from .metrics import pad_coords_to_canvas, relative_dino, trajectory_error, vlm_correctness, vseg_mae
from .pipeline import StageContext, StageReport, run_all, run_stage, stats_report
from .raster import palette_for_objects, rasterize_motion_index, colorize, write_ppm
from .rle import rle_decode, rle_encode
from .types import CanvasSpec, MaskRLE, ObjectTrack

log = logging.getLogger("innout_forge")

STAGE_COMMANDS = {
    "filter-basic": "basic",
    "filter-scores": "image-scores",
    "filter-scene": "scene",
    "select-identity": "identity",
    "filter-camera": "camera",
    "cycle-filter": "cycle",
    "mine-innout": "innout",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config with dotted or nested keys")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--in", dest="inp")
    p.add_argument("--out")


def _expand_arg(p):
    p.add_argument("--frame-w", type=int, required=True)
    p.add_argument("--frame-h", type=int, required=True)
    p.add_argument("--expand", type=int, nargs=4, default=[0, 0, 0, 0],
                   metavar=("TOP", "LEFT", "BOTTOM", "RIGHT"))


def _spec_from(args) -> CanvasSpec:
    t, l, b, r = args.expand
    return CanvasSpec(args.frame_w, args.frame_h, t, l, b, r)


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "attempts", None) is not None:
        out["curation.innout.attempts"] = args.attempts
    return out


def _load_cfg(args):
    return load_config(args.config, _overrides(args))


def _ctx(args, cfg) -> StageContext:
    paths = {k: v for k, v in dataclasses.asdict(cfg.inputs).items() if v is not None}
    for key in ("poses", "segments", "tracks", "masks", "identities"):
        v = getattr(args, key, None)
        if v is not None:
            paths[key] = v
    seed = cfg.run.seed if args.seed is None else args.seed
    workers = cfg.run.workers if args.workers is None else args.workers
    return StageContext(cfg, seed, workers, paths)


def cmd_stage(args) -> int:
    cfg = _load_cfg(args)
    if not args.inp or not args.out:
        raise ValidationError("--in and --out are required")
    stage = STAGE_COMMANDS[args.command]
    _, report = run_stage(stage, args.inp, args.out, _ctx(args, cfg))
    print(json.dumps(report.to_dict()))
    return 0


def cmd_run_all(args) -> int:
    cfg = _load_cfg(args)
    overrides = {k: getattr(args, k) for k in ("videos", "poses", "segments", "tracks", "masks")
                 if getattr(args, k) is not None}
    if args.inp:
        overrides["videos"] = args.inp
    if overrides:
        cfg = cfg.replace(inputs=dataclasses.replace(cfg.inputs, **overrides))
    if not args.out:
        raise ValidationError("--out is required")
    _, reports = run_all(cfg, args.out, seed=args.seed, workers=args.workers)
    print(stats_report(reports))
    return 0


def cmd_stats(args) -> int:
    reports = [StageReport.from_dict(d) for d in manifest_read(args.inp)]
    print(stats_report(reports))
    return 0


def _load_tracks(path) -> dict:
    """Group a tracks manifest by (video_id, starter_frame)."""
    groups = defaultdict(list)
    for row in manifest_read(path):
        key = (row["video_id"], int(row.get("starter_frame", 0)))
        groups[key].append(ObjectTrack.from_dict(
            {k: v for k, v in row.items() if k not in ("video_id", "starter_frame")}))
    return groups


def cmd_render_motion(args) -> int:
    cfg = _load_cfg(args)
    if not args.inp or not args.out:
        raise ValidationError("--in and --out are required")
    spec = _spec_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    layers = []
    for (vid, st), tracks in sorted(_load_tracks(args.inp).items()):
        tracks = [canvas_ops.canvas_expand_track(spec, t) for t in tracks]
        frames = args.frames or max(t.num_frames for t in tracks)
        index = rasterize_motion_index(tracks, spec.canvas_w, spec.canvas_h, frames, cfg.motion,
                                       scale_height=spec.frame_h)
        ordered = sorted(tracks, key=lambda t: t.object_id)
        if args.format == "ppm":
            palette = palette_for_objects(len(ordered))
            rgb = colorize(index, palette)
            d = out / f"{vid}_{st}"
            d.mkdir(exist_ok=True)
            for f in range(frames):
                write_ppm(d / f"{f:04d}.ppm", rgb[f])
        else:
            for f in range(frames):
                for ci, t in enumerate(ordered, start=1):
                    layer = index[f] == ci
                    if layer.any():
                        layers.append({"video_id": vid, "starter_frame": st, "frame_index": f,
                                       "object_id": t.object_id, "color_index": ci - 1,
                                       "mask": rle_encode(layer).to_dict()})
    if args.format == "rle":
        manifest_write(out / "motion_layers.jsonl", layers)
    return 0


def cmd_canvas(args) -> int:
    spec = _spec_from(args)
    info = dict(spec.to_dict(), canvas_w=spec.canvas_w, canvas_h=spec.canvas_h,
                first_frame_box=spec.first_frame_box.to_list())
    if args.inp:
        if not args.out:
            raise ValidationError("--out is required with --in")
        rows = []
        for row in manifest_read(args.inp):
            meta = {k: row[k] for k in ("video_id", "starter_frame") if k in row}
            t = ObjectTrack.from_dict({k: v for k, v in row.items() if k not in meta})
            rows.append(dict(canvas_ops.canvas_expand_track(spec, t).to_dict(), **meta))
        manifest_write(args.out, rows)
    print(json.dumps(info, sort_keys=True))
    return 0


def cmd_plan_layout(args) -> int:
    layout = plan_conditioning_layout(_spec_from(args), args.pixel_frames, tuple(args.compression),
                                      tuple(args.channels), args.id, args.id_noise_sigma)
    text = json.dumps(layout.to_dict(), indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _group_masks(path) -> dict:
    by_video = defaultdict(lambda: defaultdict(list))
    for row in manifest_read(path):
        by_video[row["video_id"]][int(row["frame_index"])].append(MaskRLE.from_dict(row["mask"]))
    out = {}
    for vid, frames in by_video.items():
        stack = []
        for f in sorted(frames):
            stack.append(np.logical_or.reduce([rle_decode(m) for m in frames[f]]))
        out[vid] = np.stack(stack)
    return out


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def metrics_report(gt_tracks=None, gen_tracks=None, gt_masks=None, gen_masks=None,
                   embeddings=None, judgments=None, pad: CanvasSpec = None) -> dict:
    """Per-video and aggregate metric rows from the evaluation manifests."""
    rows = defaultdict(lambda: {"traj_err": None, "vseg_mae": None, "rel_dino": None, "vlm": None})
    if gt_tracks and gen_tracks:
        gt = defaultdict(list)
        gen = defaultdict(list)
        for (vid, _), ts in _load_tracks(gt_tracks).items():
            gt[vid].extend(ts)
        for (vid, _), ts in _load_tracks(gen_tracks).items():
            gen[vid].extend(pad_coords_to_canvas(ts, pad) if pad is not None else ts)
        for vid in sorted(gt):
            rows[vid]["traj_err"] = trajectory_error(gt[vid], gen.get(vid, []))
    if gt_masks and gen_masks:
        gm, pm = _group_masks(gt_masks), _group_masks(gen_masks)
        for vid in sorted(gm):
            if vid not in pm:
                raise ValidationError(f"{vid}: no generated masks")
            rows[vid]["vseg_mae"] = vseg_mae(gm[vid], pm[vid])
    if embeddings:
        emb = defaultdict(lambda: {"id": [], "gen": [], "gt": []})
        for row in manifest_read(embeddings):
            emb[row["video_id"]][row["role"]].append((int(row.get("frame_index", 0)), row["values"]))
        for vid in sorted(emb):
            e = emb[vid]
            if len(e["id"]) != 1:
                raise ValidationError(f"{vid}: expected exactly one identity embedding")
            rows[vid]["rel_dino"] = relative_dino(e["id"][0][1], [v for _, v in sorted(e["gen"])],
                                                  [v for _, v in sorted(e["gt"])])
    vlm_gen, vlm_gt = [], []
    if judgments:
        for row in sorted(manifest_read(judgments), key=lambda r: r["video_id"]):
            rows[row["video_id"]]["vlm"] = float(bool(row["gen"]) == bool(row["gt"]))
            vlm_gen.append(bool(row["gen"]))
            vlm_gt.append(bool(row["gt"]))
    per_video = [dict(video_id=vid, **rows[vid]) for vid in sorted(rows)]
    aggregate = {
        "traj_err": _mean(r["traj_err"] for r in per_video),
        "vseg_mae": _mean(r["vseg_mae"] for r in per_video),
        "rel_dino": _mean(r["rel_dino"] for r in per_video),
        "vlm": vlm_correctness(vlm_gen, vlm_gt) if vlm_gt else None,
    }
    return {"per_video": per_video, "aggregate": aggregate}


def cmd_metrics(args) -> int:
    pad = None
    if args.pad_expand is not None:
        t, l, b, r = args.pad_expand
        pad = CanvasSpec(1, 1, t, l, b, r)
    report = metrics_report(args.gt_tracks, args.gen_tracks, args.gt_masks, args.gen_masks,
                            args.embeddings, args.judgments, pad)
    text = json.dumps(report, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="innout-forge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in STAGE_COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        for key in ("poses", "segments", "tracks", "masks", "identities"):
            p.add_argument(f"--{key}")
        if name == "mine-innout":
            p.add_argument("--attempts", type=int)
        p.set_defaults(func=cmd_stage)

    p = sub.add_parser("run-all")
    _common(p)
    for key in ("videos", "poses", "segments", "tracks", "masks"):
        p.add_argument(f"--{key}")
    p.add_argument("--attempts", type=int)
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("stats")
    _common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render-motion")
    _common(p)
    _expand_arg(p)
    p.add_argument("--frames", type=int)
    p.add_argument("--format", choices=("ppm", "rle"), default="rle")
    p.set_defaults(func=cmd_render_motion)

    p = sub.add_parser("canvas")
    _common(p)
    _expand_arg(p)
    p.set_defaults(func=cmd_canvas)

    p = sub.add_parser("plan-layout")
    _common(p)
    _expand_arg(p)
    p.add_argument("--pixel-frames", type=int, required=True)
    p.add_argument("--compression", type=int, nargs=2, required=True, metavar=("T_C", "S_C"))
    p.add_argument("--channels", type=int, nargs=3, required=True, metavar=("C_Z", "C_I", "C_M"))
    p.add_argument("--id", action="store_true")
    p.add_argument("--id-noise-sigma", type=float, default=0.0)
    p.set_defaults(func=cmd_plan_layout)

    p = sub.add_parser("metrics")
    _common(p)
    for key in ("gt-tracks", "gen-tracks", "gt-masks", "gen-masks", "embeddings", "judgments"):
        p.add_argument(f"--{key}")
    p.add_argument("--pad-expand", type=int, nargs=4, metavar=("TOP", "LEFT", "BOTTOM", "RIGHT"),
                   help="shift generated tracks from first-frame into canvas coordinates")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

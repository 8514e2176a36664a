"""Synthetic curation fixtures: videos, poses, panoptic segments, tracks and
clip masks that exercise every pipeline stage."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .cycle import TRACK_H, TRACK_W
from .identity import IdentityConfig, starter_frames
from .manifest import manifest_write
from .miner import BoxSamplerConfig, mine_patterns
from .rle import rle_encode
from .types import ObjectTrack, VideoRecord

CLIP_LEN = 49


def ellipse_mask(w: int, h: int, cx: float, cy: float, rx: float, ry: float) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    return ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0


def random_rotation(rng: np.random.Generator, max_angle: float) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    a = rng.uniform(0, max_angle)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(a) * k + (1 - np.cos(a)) * (k @ k)


def make_track(rng, oid, label, mask, start_xy, velocity, n_points, frames, native_wh,
               bad_cycle_frac=0.0, jitter=0.5):
    """Track dict at tracking resolution for points sampled on ``mask``."""
    ys, xs = np.nonzero(mask)
    pick = rng.choice(len(xs), size=min(n_points, len(xs)), replace=False)
    p0 = np.column_stack([xs[pick], ys[pick]]).astype(np.float64)
    t = np.arange(frames)[None, :, None]
    xy = p0[:, None, :] + velocity[None, None, :] * t
    xy += rng.normal(scale=jitter, size=xy.shape)
    xy[:, 0, :] = p0
    sx, sy = TRACK_W / native_wh[0], TRACK_H / native_wh[1]
    xy_t = xy * np.array([sx, sy])
    bt = xy_t[:, 0, :] + rng.normal(scale=1.0, size=(len(p0), 2))
    n_bad = int(round(bad_cycle_frac * len(p0)))
    bt[:n_bad] += 40.0
    return {
        "object_id": oid,
        "class_label": label,
        "points": [
            {
                "point_id": i,
                "positions": [[float(x), float(y), True] for x, y in xy_t[i]],
                "backtracked_start": [float(bt[i, 0]), float(bt[i, 1])],
            }
            for i in range(len(p0))
        ],
    }


def make_fixture(out_dir, n_videos: int = 20, seed: int = 0, width: int = 640, height: int = 360) -> dict:
    """Write a synthetic input set under ``out_dir``; returns the input paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    icfg = IdentityConfig()
    videos, poses, segments, tracks, masks = [], [], [], [], []
    for v in range(n_videos):
        vid = f"vid{v:04d}"
        w, h, fps, dur, scenes = width, height, 24.0, float(rng.uniform(6, 15)), 1
        kind = v % 10
        if kind == 7:
            dur = 3.0
        elif kind == 8:
            w = h
        if v % 13 == 5:
            scenes = 2
        frame_count = int(round(fps * dur))
        iframes = sorted(set([0] + rng.choice(frame_count, size=4, replace=False).tolist()))
        videos.append({
            "video_id": vid, "dataset_tag": "openvid", "width_px": w, "height_px": h,
            "fps": fps, "duration_s": dur, "frame_count": frame_count, "scene_count": scenes,
            "iframe_indices": iframes, "caption": f"synthetic clip {v}",
            "scores": {
                "clip_iqa": float(rng.uniform(0.2, 0.9)),
                "ocr_area": float(rng.uniform(0, 0.1)),
                "aesthetic": float(rng.uniform(3, 7)),
                "complexity": float(rng.uniform(0.1, 0.9)),
            },
        })
        shake = 0.02 if v % 6 else 0.2
        rot = np.eye(3)
        trans = np.zeros(3)
        for f in range(60):
            rot = rot @ random_rotation(rng, shake)
            trans = trans + rng.normal(scale=shake, size=3)
            poses.append({"video_id": vid, "frame_index": f, "rotation": rot.ravel().tolist(),
                          "translation": trans.tolist(), "focal": float(500 + rng.normal(scale=shake * 10))})

        for st in starter_frames(frame_count, iframes, icfg, clip_len=CLIP_LEN):
            n_obj = 1 if v % 5 == 0 else int(rng.integers(1, 3))
            for oid in range(n_obj):
                label = ["person", "dog", "car", "tree-merged"][int(rng.integers(0, 4)) if v % 4 else 0]
                rx, ry = w * rng.uniform(0.12, 0.2), h * rng.uniform(0.18, 0.3)
                if v % 5 == 0:
                    rx, ry = w * 0.16, h * 0.3
                entering = v % 5 == 0 or (v + oid) % 3 == 0
                if entering:
                    cx, cy = rx + 2, h / 2
                    vel = np.array([rng.uniform(4, 8), 0.0])
                else:
                    cx, cy = w * rng.uniform(0.4, 0.6), h * rng.uniform(0.4, 0.6)
                    vel = np.array([rng.choice([-1, 1]) * rng.uniform(3, 9), rng.uniform(-1, 1)])
                if v % 9 == 4:
                    vel = vel * 0.0
                m = ellipse_mask(w, h, cx, cy, rx, ry)
                rle = rle_encode(m).to_dict()
                segments.append({"video_id": vid, "frame_index": st, "object_id": oid,
                                 "class_label": label, "mask": rle})
                bad = 0.5 if v % 11 == 3 else 0.1
                tr = make_track(rng, oid, label, m, np.array([cx, cy]), vel, 16, CLIP_LEN, (w, h), bad)
                tracks.append(dict(tr, video_id=vid, starter_frame=st))
                masks.append({"video_id": vid, "starter_frame": st, "object_id": oid,
                              "frame_index": 0, "mask": rle})
                shifted = ellipse_mask(w, h, cx + vel[0] * 24, cy + vel[1] * 24, rx, ry)
                masks.append({"video_id": vid, "starter_frame": st, "object_id": oid,
                              "frame_index": 24, "mask": rle_encode(shifted).to_dict()})
    paths = {
        "videos": out_dir / "videos.jsonl",
        "poses": out_dir / "poses.jsonl",
        "segments": out_dir / "segments.jsonl",
        "tracks": out_dir / "tracks.jsonl",
        "masks": out_dir / "masks.jsonl",
    }
    for key, rows in (("videos", videos), ("poses", poses), ("segments", segments),
                      ("tracks", tracks), ("masks", masks)):
        manifest_write(paths[key], rows)
    return {k: str(p) for k, p in paths.items()}


class MiningWorkload:
    """Stream of synthetic (video, tracks) mining records at full-frame resolution.

    Masks come from a small precomputed pool so that generating a record
    costs little next to mining it; every record gets fresh point walks.
    """

    def __init__(self, seed: int = 0, width: int = 640, height: int = 360,
                 n_points: int = 20, frames: int = CLIP_LEN, pool: int = 16):
        self.rng = np.random.default_rng(seed)
        self.width, self.height, self.n_points, self.frames = width, height, n_points, frames
        self.pool = []
        for _ in range(pool):
            rx, ry = width * self.rng.uniform(0.1, 0.2), height * self.rng.uniform(0.15, 0.3)
            cx, cy = self.rng.uniform([rx, ry], [width - rx, height - ry])
            m = ellipse_mask(width, height, cx, cy, rx, ry)
            ys, xs = np.nonzero(m)
            self.pool.append((rle_encode(m), np.column_stack([xs, ys]).astype(np.float64)))

    def record(self, i: int):
        rng = self.rng
        video = VideoRecord(f"bench{i:06d}", "synthetic", self.width, self.height, 24.0,
                            self.frames / 24.0, self.frames)
        tracks = []
        for oid in range(int(rng.integers(1, 3))):
            mask, pix = self.pool[int(rng.integers(len(self.pool)))]
            p0 = pix[rng.choice(len(pix), size=self.n_points, replace=False)]
            vel = rng.uniform(-8, 8, size=2)
            steps = rng.normal(scale=1.0, size=(self.frames - 1, 2)) + vel
            xy = p0[:, None, :] + np.concatenate([np.zeros((1, 2)), np.cumsum(steps, axis=0)])[None]
            visible = np.ones(xy.shape[:2], dtype=bool)
            tracks.append(ObjectTrack(oid, "person", np.arange(self.n_points), xy, visible,
                                      first_frame_mask=mask))
        return video, tracks


def _mine_chunk(args) -> int:
    seed, start, stop, attempts = args
    workload = MiningWorkload(seed)
    cfg = BoxSamplerConfig(attempts=attempts)
    rng = np.random.default_rng(seed)
    found = 0
    for i in range(start, stop):
        video, tracks = workload.record(i)
        found += len(mine_patterns(video, 0, tracks, cfg, rng))
    return found


def bench_mining(n_records: int, attempts: int = 2000, workers: int = 1, seed: int = 0,
                 chunk: int = 250) -> tuple:
    """Mine ``n_records`` synthetic records; returns (patterns found, seconds).

    Records are split into fixed-size chunks with their own seeds, so the
    pattern count does not depend on ``workers``.
    """
    _mine_chunk((seed, 0, 1, 8))  # compile the kernels outside the timed region
    jobs = [(seed + c, a, min(a + chunk, n_records), attempts)
            for c, a in enumerate(range(0, n_records, chunk))]
    t0 = time.perf_counter()
    if workers <= 1:
        found = sum(map(_mine_chunk, jobs))
    else:
        with ProcessPoolExecutor(workers) as pool:
            found = sum(pool.map(_mine_chunk, jobs))
    return found, time.perf_counter() - t0

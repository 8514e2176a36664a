import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from innout_forge.cycle import mask_refine, motion_stats, object_viability, rescale_track, roundtrip_filter
from innout_forge.errors import ValidationError
from innout_forge.rle import rle_encode

from helpers import track_from_xy
from oracles import chebyshev_to_mask_ref


def one_point(err, frames=3):
    xy = np.zeros((1, frames, 2))
    xy[0, :, :] = [100.0, 100.0]
    return track_from_xy(xy, backtracked=[[100.0 + err, 100.0]])


class TestRoundtrip:
    def test_examples(self):
        assert roundtrip_filter(one_point(10.0), 384).tolist() == [True]
        assert roundtrip_filter(one_point(20.0), 384).tolist() == [False]
        assert roundtrip_filter(one_point(0.0), 384).tolist() == [True]

    def test_threshold_edge(self):
        assert roundtrip_filter(one_point(15.36), 384).tolist() == [True]
        assert roundtrip_filter(one_point(15.37), 384).tolist() == [False]

    def test_missing_backtrack(self):
        with pytest.raises(ValidationError):
            roundtrip_filter(track_from_xy(np.zeros((2, 3, 2))), 384)

    def test_brute_force_1000(self, rng):
        for _ in range(1000):
            p = int(rng.integers(1, 12))
            xy = rng.uniform(0, 512, size=(p, 4, 2))
            bt = xy[:, 0, :] + rng.normal(scale=12, size=(p, 2))
            t = track_from_xy(xy, backtracked=bt)
            keep = roundtrip_filter(t, 384)
            ref = [math.dist(xy[i, 0], bt[i]) <= 0.04 * 384 for i in range(p)]
            assert keep.tolist() == ref

    def test_order_independent(self, rng):
        xy = rng.uniform(0, 512, size=(8, 3, 2))
        bt = xy[:, 0, :] + rng.normal(scale=15, size=(8, 2))
        perm = rng.permutation(8)
        a = roundtrip_filter(track_from_xy(xy, backtracked=bt), 384)
        b = roundtrip_filter(track_from_xy(xy[perm], backtracked=bt[perm], point_ids=perm), 384)
        assert a[perm].tolist() == b.tolist()


class TestViability:
    def test_examples(self):
        assert object_viability(10, 7)
        assert not object_viability(10, 6)
        assert object_viability(10, 10)

    def test_exact_third(self):
        assert object_viability(3, 2)
        assert object_viability(9, 6)
        assert not object_viability(9, 5)
        assert not object_viability(3000, 1999)

    def test_errors(self):
        with pytest.raises(ValidationError):
            object_viability(0, 0)
        with pytest.raises(ValidationError):
            object_viability(5, 6)


class TestMotionStats:
    def test_static(self):
        assert motion_stats(track_from_xy(np.full((3, 10, 2), 50.0)), 400) == (0.0, 0.0)

    def test_constant_speed(self):
        xy = np.zeros((2, 10, 2))
        xy[:, :, 0] = np.arange(10) * 4.0
        xy[1, :, 1] = 7.0
        mean, mx = motion_stats(track_from_xy(xy), 400)
        assert abs(mean - 0.01) < 1e-12 and abs(mx - 0.01) < 1e-12

    def test_single_jump(self):
        xy = np.zeros((1, 10, 2))
        xy[0, 5:, 0] = 40.0
        _, mx = motion_stats(track_from_xy(xy), 400)
        assert abs(mx - 0.10) < 1e-12

    def test_invisible_frames_skipped(self):
        xy = np.zeros((1, 4, 2))
        xy[0, :, 0] = [0, 999, 8, 12]
        vis = np.array([[True, False, True, True]])
        mean, mx = motion_stats(track_from_xy(xy, vis), 400)
        assert mx == pytest.approx(8 / 400) and mean == pytest.approx(6 / 400)

    def test_errors(self):
        with pytest.raises(ValidationError):
            motion_stats(track_from_xy(np.zeros((1, 1, 2))), 400)
        vis = np.array([[True, False, False]])
        with pytest.raises(ValidationError):
            motion_stats(track_from_xy(np.zeros((1, 3, 2)), vis), 400)


def block_mask(w, h, x0, y0, x1, y1):
    g = np.zeros((h, w), bool)
    g[y0:y1, x0:x1] = True
    return g


class TestMaskRefine:
    def test_inside_kept(self):
        m = rle_encode(block_mask(40, 40, 10, 10, 20, 20))
        t = track_from_xy(np.full((1, 3, 2), 15.0))
        assert mask_refine(t, {0: m, 2: m}).tolist() == [True]

    def test_far_outside_dropped(self):
        m = rle_encode(block_mask(40, 40, 10, 10, 20, 20))
        xy = np.full((1, 3, 2), 15.0)
        xy[0, 2] = [29.0, 15.0]
        assert mask_refine(track_from_xy(xy), {2: m}).tolist() == [False]

    def test_tolerance_boundary(self):
        m = rle_encode(block_mask(40, 40, 10, 10, 20, 20))
        xy = np.full((2, 1, 2), 15.0)
        xy[0, 0] = [21.0, 15.0]
        xy[1, 0] = [22.0, 21.0]
        assert mask_refine(track_from_xy(xy), {0: m}).tolist() == [True, False]

    def test_unmasked_frames_never_drop(self):
        m = rle_encode(block_mask(40, 40, 10, 10, 20, 20))
        xy = np.full((1, 3, 2), 15.0)
        xy[0, 1] = [39.0, 39.0]
        assert mask_refine(track_from_xy(xy), {0: m, 2: m}).tolist() == [True]

    def test_invisible_not_tested(self):
        m = rle_encode(block_mask(40, 40, 10, 10, 20, 20))
        xy = np.full((1, 2, 2), 35.0)
        xy[0, 0] = 15.0
        vis = np.array([[True, False]])
        assert mask_refine(track_from_xy(xy, vis), {1: m}).tolist() == [True]

    def test_dimension_mismatch(self):
        m = rle_encode(block_mask(40, 40, 10, 10, 20, 20))
        with pytest.raises(ValidationError):
            mask_refine(track_from_xy(np.zeros((1, 2, 2))), {0: m}, frame_w=50, frame_h=40)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**31))
    def test_matches_distance_oracle(self, seed):
        rng = np.random.default_rng(seed)
        w, h = int(rng.integers(4, 20)), int(rng.integers(4, 20))
        g = rng.random((h, w)) < 0.15
        g[int(rng.integers(h)), int(rng.integers(w))] = True
        xy = rng.uniform(-6, max(w, h) + 6, size=(6, 1, 2)).round(1)
        keep = mask_refine(track_from_xy(xy), {0: rle_encode(g)}, tol_px=2)
        for i in range(6):
            px, py = math.ceil(xy[i, 0, 0] - 0.5), math.ceil(xy[i, 0, 1] - 0.5)
            assert keep[i] == (chebyshev_to_mask_ref(g.tolist(), px, py) <= 2)


def test_rescale_track():
    xy = np.array([[[512.0, 384.0], [256.0, 192.0]]])
    t = track_from_xy(xy, backtracked=[[512.0, 384.0]])
    r = rescale_track(t, 512, 384, 1024, 576)
    assert r.xy[0, 0].tolist() == [1024.0, 576.0]
    assert r.backtracked[0].tolist() == [1024.0, 576.0]

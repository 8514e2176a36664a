import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from innout_forge.errors import ValidationError
from innout_forge.metrics import (JudgmentRequest, collect_judgments, pad_coords_to_canvas, relative_dino,
                                  trajectory_error, vlm_correctness, vseg_mae)
from innout_forge.rle import rle_encode
from innout_forge.types import CanvasSpec

from helpers import track_from_xy


def ten_pairs():
    gt = track_from_xy(np.arange(20, dtype=float).reshape(10, 1, 2))
    xy = gt.xy.copy()
    xy[3, 0] += [3.0, 4.0]
    return gt, gt.with_xy(xy)


class TestTrajectoryError:
    def test_identical(self):
        gt, _ = ten_pairs()
        assert trajectory_error([gt], [gt]) == 0.0

    def test_hand_value(self):
        gt, gen = ten_pairs()
        assert abs(trajectory_error([gt], [gen]) - 0.5) <= 1e-12

    def test_mismatched_ids(self):
        gt, _ = ten_pairs()
        other = track_from_xy(gt.xy, point_ids=np.arange(1, 11))
        with pytest.raises(ValidationError):
            trajectory_error([gt], [other])

    def test_only_mutually_visible(self):
        xy = np.zeros((1, 3, 2))
        gen_xy = xy.copy()
        gen_xy[0, 1] = [100.0, 0.0]
        gt = track_from_xy(xy, np.array([[True, True, True]]))
        gen = track_from_xy(gen_xy, np.array([[True, False, True]]))
        assert trajectory_error([gt], [gen]) == 0.0

    def test_no_pairs(self):
        t = track_from_xy(np.zeros((1, 2, 2)), np.array([[True, False]]))
        u = track_from_xy(np.zeros((1, 2, 2)), np.array([[False, True]]))
        with pytest.raises(ValidationError):
            trajectory_error([t], [u])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31))
    def test_symmetric_nonneg(self, seed):
        rng = np.random.default_rng(seed)
        p, f = rng.integers(1, 6, size=2)
        a = track_from_xy(rng.normal(size=(p, f, 2)) * 50, rng.random((p, f)) < 0.9)
        b = track_from_xy(rng.normal(size=(p, f, 2)) * 50, rng.random((p, f)) < 0.9)
        if not (a.visible & b.visible).any():
            return
        e_ab, e_ba = trajectory_error([a], [b]), trajectory_error([b], [a])
        assert e_ab >= 0 and abs(e_ab - e_ba) < 1e-12
        assert trajectory_error([a], [a]) == 0.0

    def test_order_independent(self, rng):
        ts = [track_from_xy(rng.normal(size=(3, 4, 2)), object_id=i) for i in range(4)]
        us = [t.with_xy(t.xy + rng.normal(size=t.xy.shape)) for t in ts]
        assert trajectory_error(ts, us) == trajectory_error(ts[::-1], us[::-1])


class TestPad:
    def test_examples(self):
        t = track_from_xy([[[5.0, 5.0]]])
        assert pad_coords_to_canvas([t], CanvasSpec(10, 10))[0].xy[0, 0].tolist() == [5, 5]
        s = CanvasSpec(10, 10, expand_top=10, expand_left=20)
        once = pad_coords_to_canvas([t], s)
        assert once[0].xy[0, 0].tolist() == [25, 15]
        assert pad_coords_to_canvas(once, s)[0].xy[0, 0].tolist() == [45, 25]
        assert np.array_equal(once[0].visible, t.visible)


class TestVsegMae:
    def test_identical_and_complement(self, rng):
        m = rng.random((3, 4, 5)) < 0.5
        assert vseg_mae(m, m) == 0.0
        assert vseg_mae(m, ~m) == 1.0

    def test_one_pixel(self):
        a = np.zeros((1, 2, 2), bool)
        b = a.copy()
        b[0, 1, 0] = True
        assert abs(vseg_mae(a, b) - 0.25) <= 1e-12

    def test_rle_inputs(self):
        a = np.zeros((2, 2), bool)
        b = a.copy()
        b[0, 0] = True
        assert vseg_mae([rle_encode(a)], [rle_encode(b)]) == 0.25

    def test_dim_mismatch(self):
        with pytest.raises(ValidationError):
            vseg_mae(np.zeros((1, 2, 2)), np.zeros((1, 2, 3)))

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_brute_force_and_symmetry(self, data):
        shape = data.draw(st.tuples(st.integers(1, 3), st.integers(1, 5), st.integers(1, 5)))
        a = data.draw(hnp.arrays(bool, shape))
        b = data.draw(hnp.arrays(bool, shape))
        f, h, w = shape
        ref = sum(abs(int(a[i, y, x]) - int(b[i, y, x])) for i in range(f) for y in range(h) for x in range(w))
        v = vseg_mae(a, b)
        assert v == ref / (f * h * w) and v == vseg_mae(b, a) and 0.0 <= v <= 1.0


def unit(deg):
    r = math.radians(deg)
    return [math.cos(r), math.sin(r)]


class TestRelativeDino:
    def test_identical(self):
        e = [unit(10), unit(40)]
        assert relative_dino(unit(0), e, e) == 0.0

    def test_hand_value(self):
        # cos(60 deg) = 0.5 for gt; gen frames average 0.5 and 0.0 -> 0.25
        gen = [unit(60), unit(90)]
        gt = [unit(60), unit(-60)]
        assert abs(relative_dino(unit(0), gen, gt) - 0.5) <= 1e-12

    def test_orthogonal_gt(self):
        with pytest.raises(ValidationError):
            relative_dino(unit(0), [unit(0)], [unit(90)])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            relative_dino(unit(0), [unit(0)], [])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.1, 10))
    def test_scale_invariant(self, seed, k):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 8))
        idv = rng.normal(size=d)
        gt = [idv + rng.normal(scale=0.3, size=d) for _ in range(3)]
        gen = [rng.normal(size=d) for _ in range(3)]
        base = relative_dino(idv, gen, gt)
        scaled = relative_dino(idv * k, [g * k for g in gen], [g * 2 * k for g in gt])
        assert abs(base - scaled) < 1e-9


class TestVlm:
    def test_examples(self):
        assert vlm_correctness([True, False], [True, False]) == 1.0
        assert vlm_correctness([True, False], [False, True]) == 0.0
        assert vlm_correctness([True, True, False, False], [True, True, False, True]) == 0.75

    def test_empty(self):
        with pytest.raises(ValidationError):
            vlm_correctness([], [])

    def test_provider(self):
        class Yes:
            def judge(self, request):
                return "enter" in request.instruction
        reqs = [JudgmentRequest("v", "frames/v", "does the dog enter?"), JudgmentRequest("v", "frames/v", "exit?")]
        assert collect_judgments(Yes(), reqs) == [True, False]

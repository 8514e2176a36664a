import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from innout_forge.curation import (BasicFilterConfig, PercentileRule, Tail, basic_filter, camera_motion_score,
                                   camera_series_stats, camera_window, percentile_filter, scene_filter)
from innout_forge.errors import ValidationError
from innout_forge.synthetic import random_rotation
from innout_forge.types import PoseSample, VideoRecord


def video(**kw):
    d = dict(video_id="v", dataset_tag="openvid", width_px=1280, height_px=720, fps=25.0,
             duration_s=10.0, frame_count=250, scene_count=1)
    d.update(kw)
    if "frame_count" not in kw:
        d["frame_count"] = int(round(d["fps"] * d["duration_s"]))
    return VideoRecord(**d)


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def pose(rot=None, t=(0, 0, 0), f=500.0, i=0):
    return PoseSample(i, np.eye(3) if rot is None else rot, np.asarray(t, float), f)


class TestBasicFilter:
    def test_short_duration(self):
        assert basic_filter(video(duration_s=3.0)) == "duration"

    def test_keep(self):
        assert basic_filter(video()) is None

    def test_square_aspect(self):
        assert basic_filter(video(width_px=960, height_px=960)) == "aspect"

    def test_order_of_reasons(self):
        assert basic_filter(video(duration_s=30.0, fps=60.0, width_px=300, height_px=300)) == "duration"
        assert basic_filter(video(fps=60.0, width_px=300, height_px=300)) == "fps"
        assert basic_filter(video(width_px=300, height_px=200)) == "width"

    def test_boundaries(self):
        assert basic_filter(video(duration_s=4.0)) is None
        assert basic_filter(video(duration_s=20.0)) is None
        assert basic_filter(video(fps=31.0)) is None
        assert basic_filter(video(fps=20.0)) is None
        assert basic_filter(video(width_px=1350, height_px=1000)) == "aspect"
        assert basic_filter(video(width_px=400, height_px=200)) is None

    def test_missing_metadata(self):
        with pytest.raises(ValidationError):
            basic_filter(video(duration_s=float("nan"), frame_count=1))

    def test_config_invariant(self):
        with pytest.raises(ValidationError):
            BasicFilterConfig(min_duration_s=20, max_duration_s=4)

    def test_pure(self):
        r = video(duration_s=3.0)
        before = r.to_dict()
        basic_filter(r)
        assert r.to_dict() == before


def _ids(vals):
    return [(f"id{v:02d}", float(v)) for v in vals]


class TestPercentile:
    def test_low(self):
        assert percentile_filter(_ids(range(1, 11)), PercentileRule("m", Tail.LOW, 0.30)) == {"id01", "id02", "id03"}

    def test_high(self):
        assert percentile_filter(_ids(range(1, 11)), PercentileRule("m", Tail.HIGH, high_fraction=0.10)) == {"id10"}

    def test_both(self):
        assert percentile_filter(_ids(range(1, 11)), PercentileRule("m", Tail.BOTH, 0.10, 0.10)) == {"id01", "id10"}

    def test_ties_by_id(self):
        vals = [("b", 1.0), ("a", 1.0), ("c", 2.0)]
        assert percentile_filter(vals, PercentileRule("m", Tail.LOW, 0.34)) == {"a"}

    def test_errors(self):
        with pytest.raises(ValidationError):
            percentile_filter([], PercentileRule("m", Tail.LOW, 0.1))
        with pytest.raises(ValidationError):
            PercentileRule("m", Tail.LOW, 1.5)
        with pytest.raises(ValidationError):
            PercentileRule("m", Tail.BOTH, 0.6, 0.4)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200),
           st.integers(0, 49), st.integers(0, 49), st.randoms(use_true_random=False))
    def test_counts_and_permutation(self, vals, lo, hi, rnd):
        lo, hi = lo / 100, hi / 100
        items = [(f"i{k:03d}", v) for k, v in enumerate(vals)]
        rule = PercentileRule("m", Tail.BOTH, lo, hi)
        dropped = percentile_filter(items, rule)
        n = len(items)
        n_lo, n_hi = math.floor(round(n * lo, 9)), math.floor(round(n * hi, 9))
        assert len(dropped) == min(n, n_lo + n_hi)
        shuffled = list(items)
        rnd.shuffle(shuffled)
        assert percentile_filter(shuffled, rule) == dropped
        # everything dropped from the low tail ranks below everything kept
        order = sorted(items, key=lambda iv: (iv[1], iv[0]))
        assert {i for i, _ in order[:n_lo]} <= dropped

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.integers(0, 40), st.integers(0, 40))
    def test_composition_monotone(self, vals, a, b):
        items = [(f"i{k:03d}", v) for k, v in enumerate(vals)]
        r1 = PercentileRule("m", Tail.LOW, a / 100)
        r2 = PercentileRule("m", Tail.HIGH, high_fraction=b / 100)
        d1 = percentile_filter(items, r1)
        survivors = [iv for iv in items if iv[0] not in d1]
        d2 = percentile_filter(survivors, r2) if survivors else set()
        assert d1 <= d1 | d2
        assert not (d2 & d1)


class TestScene:
    def test_examples(self):
        assert scene_filter(video(scene_count=1)) is None
        assert scene_filter(video(scene_count=2)) == "scene"
        assert scene_filter(video(scene_count=0)) is None


class TestCamera:
    def test_identical(self):
        assert camera_motion_score(pose(), pose()) == 0.0

    def test_translation_only(self):
        assert abs(camera_motion_score(pose(), pose(t=(3, 4, 0))) - 5.0) <= 1e-9

    def test_quarter_turn(self):
        assert abs(camera_motion_score(pose(), pose(rot=rot_z(math.pi / 2))) - math.pi / 2) <= 1e-9

    def test_non_orthonormal(self):
        with pytest.raises(ValidationError):
            camera_motion_score(pose(rot=np.eye(3) * 1.1), pose())

    def test_near_identity_no_nan(self):
        r = rot_z(1e-9)
        assert math.isfinite(camera_motion_score(pose(rot=r), pose()))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_symmetry_and_nonneg(self, seed):
        rng = np.random.default_rng(seed)
        a = pose(rot=random_rotation(rng, math.pi), t=rng.normal(size=3))
        b = pose(rot=random_rotation(rng, math.pi), t=rng.normal(size=3))
        s_ab, s_ba = camera_motion_score(a, b), camera_motion_score(b, a)
        assert s_ab >= 0 and abs(s_ab - s_ba) < 1e-9
        assert camera_motion_score(a, a) < 1e-6

    def test_series_constant(self):
        s = camera_series_stats([pose(i=i) for i in range(5)])
        assert (s.rotation_err, s.translation_err, s.focal_change) == (0, 0, 0)

    def test_series_translation(self):
        s = camera_series_stats([pose(t=(0, 0, 0)), pose(t=(1, 0, 0)), pose(t=(3, 0, 0))])
        assert (s.rotation_err, s.translation_err, s.focal_change) == (0, 3.0, 0)

    def test_series_focal(self):
        s = camera_series_stats([pose(f=100.0), pose(f=110.0)])
        assert abs(s.focal_change - 0.10) < 1e-12

    def test_series_needs_two(self):
        with pytest.raises(ValidationError):
            camera_series_stats([pose()])

    def test_window(self):
        poses = [pose(i=i) for i in reversed(range(100))]
        w = camera_window(poses, 10, 6)
        assert len(w) == 60 and [p.frame_index for p in w] == list(range(60))

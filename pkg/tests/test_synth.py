import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evlife.events_io import EventStream, SensorGeometry
from evlife.plane_fit import PlaneNormal
from evlife.synth import (NoiseSpec, StripeScene, gen_planar_window, gen_stripes, inject_isolated_noise,
                          jitter_timestamps, scatter_count)

G = SensorGeometry(32, 8)


def test_stripe_truth_is_inverse_velocity():
    s, truth = gen_stripes(StripeScene(G, (0.0,), velocity=100, duration=0.5))
    assert len(s) == len(truth) > 0
    assert np.all(truth == 0.01)


def test_single_stripe_unit_velocity():
    s, _ = gen_stripes(StripeScene(SensorGeometry(3, 1), (0.0,), velocity=1, duration=3))
    assert [(e.t, e.x) for e in s] == [(0.0, 0), (1.0, 1), (2.0, 2)]


def test_single_stripe_duration_clip():
    # x = 3 would fire at t = 3 > duration
    s, _ = gen_stripes(StripeScene(SensorGeometry(10, 1), (0.0,), velocity=1, duration=2.5))
    assert [e.x for e in s] == [0, 1, 2]


def test_doubling_velocity_halves_time():
    slow, _ = gen_stripes(StripeScene(G, (0.0, 16.0), velocity=50, duration=10))
    fast, _ = gen_stripes(StripeScene(G, (0.0, 16.0), velocity=100, duration=10))
    assert len(slow) == len(fast)
    assert np.allclose(fast.t, slow.t / 2)
    assert np.array_equal(fast.x, slow.x)


def test_negative_velocity():
    s, truth = gen_stripes(StripeScene(G, (31.0,), velocity=-10, duration=10))
    assert s[0].x == 31 and s[len(s) - 1].x == 0
    assert np.allclose(truth, 0.1)


def test_stripe_no_crossing_gives_empty():
    s, truth = gen_stripes(StripeScene(G, (100.0,), velocity=10, duration=1))
    assert len(s) == 0 and len(truth) == 0


def test_scene_invariants():
    with pytest.raises(ValueError):
        StripeScene(G, velocity=0)
    with pytest.raises(ValueError):
        StripeScene(G, duration=0)
    with pytest.raises(ValueError):
        NoiseSpec(scatter_fraction=1.5)
    with pytest.raises(ValueError):
        NoiseSpec(timestamp_sigma=-1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-20, 40), min_size=1, max_size=4),
       st.floats(1, 500) | st.floats(-500, -1), st.floats(0.01, 1))
def test_stripes_are_valid_streams(pos, v, dur):
    s, truth = gen_stripes(StripeScene(G, tuple(pos), velocity=v, duration=dur))
    EventStream(s.geometry, s.t, s.x, s.y, s.p)  # revalidates
    assert np.allclose(truth, 1 / abs(v))


def test_zero_rate_noise_is_identity():
    s, _ = gen_stripes(StripeScene(G, (0.0,), velocity=100, duration=0.2))
    out, flags = inject_isolated_noise(s, NoiseSpec(isolated_rate=0, seed=3))
    assert out == s and not flags.any()


def test_noise_count_poisson():
    s, _ = gen_stripes(StripeScene(G, (0.0,), velocity=100, duration=0.3))
    rate = 0.5
    mean = rate * G.width * G.height * 1.0
    counts = []
    for seed in range(100):
        _, flags = inject_isolated_noise(s, NoiseSpec(isolated_rate=rate, seed=seed), t_range=(0.0, 1.0))
        counts.append(int(flags.sum()))
    counts = np.array(counts)
    assert np.all(np.abs(counts - mean) <= 5 * math.sqrt(mean))
    # mean of 100 draws: sd is sqrt(mean / 100)
    assert abs(counts.mean() - mean) <= 5 * math.sqrt(mean / 100)


def test_noise_deterministic_and_aligned():
    s, truth = gen_stripes(StripeScene(G, (0.0,), velocity=100, duration=0.3))
    a, fa = inject_isolated_noise(s, NoiseSpec(isolated_rate=2, seed=7))
    b, fb = inject_isolated_noise(s, NoiseSpec(isolated_rate=2, seed=7))
    assert a == b and np.array_equal(fa, fb)
    assert fa.any()
    # signal events survive in their original order
    assert a.select(~fa) == s


def test_jitter_clips_and_permutes():
    s, _ = gen_stripes(StripeScene(G, (0.0,), velocity=100, duration=0.3))
    j, perm = jitter_timestamps(s, 0.01, seed=2)
    assert np.all(j.t >= 0)
    assert np.array_equal(j.x, s.x[perm])
    assert sorted(perm.tolist()) == list(range(len(s)))


# ----------------------------------------------------------- planar window

def _residual(normal, ts):
    n = len(ts)
    xs, ys = np.meshgrid(np.arange(n), np.arange(n))
    return np.abs(normal[0] * xs + normal[1] * ys + normal[2] * ts - 1)


def test_noiseless_window_on_plane():
    for normal in [(-1, -1, 1), (0.3, -0.2, 0.05), (-2, 0.5, 0.7)]:
        pw = gen_planar_window(5, normal)
        assert np.all(_residual(normal, pw.window.timestamps) < 1e-12)
        assert pw.truth_inliers.all()


def test_window_pixel_value():
    pw = gen_planar_window(5, PlaneNormal(-1, -1, 1))
    assert pw.window.timestamps[1, 1] == 3.0
    assert pw.window.center_time == 5.0


def test_scatter_count_exact():
    pw = gen_planar_window(5, spec=NoiseSpec(timestamp_sigma=1.0, scatter_fraction=0.2, seed=0), mode="scattered")
    assert pw.perturbed.sum() == 5
    assert not pw.perturbed[2, 2]


def test_scatter_rounding_half_up():
    assert scatter_count(0.2, 5) == 5
    assert scatter_count(0.1, 5) == 3  # 2.5 -> 3
    assert scatter_count(0.0, 5) == 0


def test_scattered_truth_labels():
    pw = gen_planar_window(5, spec=NoiseSpec(timestamp_sigma=1.0, scatter_fraction=0.4, seed=4), mode="scattered")
    assert np.all(pw.truth_inliers[~pw.perturbed])
    assert not np.all(pw.truth_inliers[pw.perturbed])


def test_planar_errors():
    with pytest.raises(ValueError):
        gen_planar_window(5, (1, 1, 0))
    with pytest.raises(ValueError):
        gen_planar_window(4)


@given(st.integers(0, 10_000))
@settings(max_examples=25)
def test_planar_window_pure(seed):
    spec = NoiseSpec(timestamp_sigma=0.3, scatter_fraction=0.2, seed=seed)
    for mode in ("global", "scattered"):
        a = gen_planar_window(5, spec=spec, mode=mode)
        b = gen_planar_window(5, spec=spec, mode=mode)
        assert np.array_equal(a.window.timestamps, b.window.timestamps)
        assert np.array_equal(a.truth_inliers, b.truth_inliers)
        assert np.all(a.window.timestamps >= 0)

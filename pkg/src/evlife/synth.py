"""Synthetic event streams and SAE windows with known ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .events_io import EventStream, SensorGeometry
from .plane_fit import ANCHOR_TIME, PlaneNormal
from .sae import SaeWindow


@dataclass(frozen=True)
class StripeScene:
    geometry: SensorGeometry
    stripe_positions: tuple[float, ...] = tuple(16.0 * k for k in range(8))
    velocity: float = 100.0
    duration: float = 0.5
    polarity: bool = True

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.velocity == 0 or not math.isfinite(self.velocity):
            raise ValueError("velocity must be finite and nonzero")
        object.__setattr__(self, "stripe_positions", tuple(float(s) for s in self.stripe_positions))

    @property
    def true_lifetime(self) -> float:
        return 1.0 / abs(self.velocity)


@dataclass(frozen=True)
class NoiseSpec:
    isolated_rate: float = 0.0
    timestamp_sigma: float = 0.0
    scatter_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.isolated_rate < 0 or self.timestamp_sigma < 0:
            raise ValueError("rates and sigmas must be >= 0")
        if not 0 <= self.scatter_fraction <= 1:
            raise ValueError("scatter_fraction must lie in [0, 1]")


def gen_stripes(scene: StripeScene) -> tuple[EventStream, np.ndarray]:
    """Vertical stripes sweeping along x, one event per pixel crossing.

    Returns the stream and per-event ground-truth lifetimes (all ``1/|v|``).
    """
    g = scene.geometry
    cols = np.arange(g.width, dtype=np.float64)
    t, x = [], []
    for pos in scene.stripe_positions:
        tc = (cols - pos) / scene.velocity
        hit = (tc >= 0) & (tc <= scene.duration)
        t.append(np.repeat(tc[hit], g.height))
        x.append(np.repeat(cols[hit].astype(np.int64), g.height))
    t = np.concatenate(t) if t else np.zeros(0)
    x = np.concatenate(x) if x else np.zeros(0, dtype=np.int64)
    rows = np.arange(g.height, dtype=np.int64)
    y = np.tile(rows, len(t) // g.height) if g.height else np.zeros(0, dtype=np.int64)
    order = np.lexsort((x, y, t))
    t, x, y = t[order], x[order], y[order]
    stream = EventStream(g, t, x, y, np.full(len(t), scene.polarity))
    return stream, np.full(len(t), scene.true_lifetime)


def inject_isolated_noise(stream: EventStream, spec: NoiseSpec,
                          t_range: tuple[float, float] | None = None) -> tuple[EventStream, np.ndarray]:
    """Add Poisson background events uniform over pixels, time and polarity.

    ``t_range`` defaults to the span of ``stream``. Signal events keep their
    relative order, so per-event truth arrays stay aligned via ``~flags``.
    """
    g = stream.geometry
    if t_range is None:
        t_range = (float(stream.t[0]), float(stream.t[-1])) if len(stream) else (0.0, 0.0)
    t0, t1 = t_range
    span = max(t1 - t0, 0.0)
    rng = np.random.default_rng(spec.seed)
    k = rng.poisson(spec.isolated_rate * g.width * g.height * span) if spec.isolated_rate > 0 else 0
    if k == 0:
        return stream, np.zeros(len(stream), dtype=bool)
    nt = rng.uniform(t0, t1, k)
    nx = rng.integers(0, g.width, k)
    ny = rng.integers(0, g.height, k)
    npol = rng.integers(0, 2, k).astype(bool)
    t = np.concatenate([stream.t, nt])
    flags = np.concatenate([np.zeros(len(stream), dtype=bool), np.ones(k, dtype=bool)])
    order = np.argsort(t, kind="stable")
    out = EventStream(g, t[order], np.concatenate([stream.x, nx])[order],
                      np.concatenate([stream.y, ny])[order], np.concatenate([stream.p, npol])[order])
    return out, flags[order]


def jitter_timestamps(stream: EventStream, sigma: float, seed: int = 0) -> tuple[EventStream, np.ndarray]:
    """Gaussian timestamp noise (clipped at 0), re-sorted.

    Returns the new stream and the permutation: ``out[i]`` came from
    ``stream[perm[i]]``.
    """
    if sigma == 0 or len(stream) == 0:
        return stream, np.arange(len(stream))
    rng = np.random.default_rng(seed)
    t = np.maximum(stream.t + rng.normal(0.0, sigma, len(stream)), 0.0)
    perm = np.argsort(t, kind="stable")
    return EventStream(stream.geometry, t[perm], stream.x[perm], stream.y[perm], stream.p[perm]), perm


# ----------------------------------------------------------- planar windows

@dataclass(frozen=True, eq=False)
class PlanarWindow:
    window: SaeWindow
    truth_inliers: np.ndarray
    perturbed: np.ndarray
    normal: PlaneNormal = field(default=PlaneNormal(-1.0, -1.0, 1.0))

    @property
    def true_lifetime(self) -> float:
        n1, n2, n3 = self.normal
        return math.hypot(n1, n2) / abs(n3)


def plane_time(normal, x, y):
    n1, n2, n3 = normal
    return (1.0 - n1 * np.asarray(x, dtype=np.float64) - n2 * np.asarray(y, dtype=np.float64)) / n3


def scatter_count(fraction: float, n: int) -> int:
    # round half up
    return int(math.floor(fraction * n * n + 0.5))


def gen_planar_window(n: int = 5, normal=PlaneNormal(-1.0, -1.0, 1.0), spec: NoiseSpec = NoiseSpec(),
                      mode: str = "global", inlier_eps: float = 0.01) -> PlanarWindow:
    """n x n window whose timestamps lie on ``n . (x, y, t) = 1``, then perturbed.

    Pixel ``(x, y)`` is column/row index in the window (0..n-1).

    ``mode="global"`` adds N(0, sigma) to every pixel and all pixels stay true
    inliers. ``mode="scattered"`` perturbs ``round(scatter_fraction * n^2)``
    past pixels (never the centre); a perturbed pixel is an outlier when its
    point-plane distance in the fitting frame reaches ``inlier_eps``.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be odd and >= 3, got {n}")
    normal = PlaneNormal(*(float(c) for c in normal))
    if normal.n3 == 0:
        raise ValueError("n3 = 0: plane is not a function t(x, y)")
    if mode not in ("global", "scattered"):
        raise ValueError(f"unknown noise mode {mode!r}")
    idx = np.arange(n, dtype=np.float64)
    xs, ys = np.meshgrid(idx, idx)
    exact = plane_time(normal, xs, ys)
    rng = np.random.default_rng(spec.seed)
    r = n // 2

    perturbed = np.zeros((n, n), dtype=bool)
    if mode == "global":
        if spec.timestamp_sigma > 0:
            perturbed[:] = True
    else:
        k = scatter_count(spec.scatter_fraction, n)
        past = np.flatnonzero(np.arange(n * n) != r * n + r)
        chosen = rng.choice(past, size=min(k, len(past)), replace=False)
        perturbed.flat[chosen] = True

    ts = exact.copy()
    if spec.timestamp_sigma > 0 and perturbed.any():
        noise = rng.normal(0.0, spec.timestamp_sigma, perturbed.sum())
        ts[perturbed] = np.maximum(exact[perturbed] + noise, 0.0)

    if mode == "global":
        truth = np.ones((n, n), dtype=bool)
    else:
        # distance in the fitting frame anchored at the true centre time
        nf = _fit_frame_normal(normal, r, exact[r, r])
        a = nf[0] * (xs - r) + nf[1] * (ys - r) + nf[2] * (ts - exact[r, r] + ANCHOR_TIME) - 1.0
        dist = np.abs(a) / float(np.dot(nf, nf))
        truth = ~perturbed | (dist < inlier_eps)

    window = SaeWindow((r, r), n, ts, float(ts[r, r]))
    return PlanarWindow(window, truth, perturbed, normal)


def _fit_frame_normal(normal, r, center_time):
    """Express the plane in the centred fitting frame used by plane_fit."""
    nv = np.array(normal, dtype=np.float64)
    origin = np.array([r, r, center_time - ANCHOR_TIME])
    return nv / (1.0 - nv @ origin)

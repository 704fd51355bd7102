"""Robust local plane fitting on an SAE window.

Planes are written ``n1*x + n2*y + n3*t = 1``. Fitting happens in a window-local
frame: ``x``/``y`` are pixel offsets from the window centre and time is shifted
so the current event sits at ``(0, 0, ANCHOR_TIME)``. A translation only
rescales ``n``, so the plane direction (and hence flow and lifetime) is the
same in every frame.

Hypotheses are drawn from the current event plus two past events of the
recent k-means cluster. Each window pixel is scored by the distance from the
plane to the closest point of its intra-pixel box of half-width ``delta``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .sae import SaeWindow

ANCHOR_TIME = 1.0
KMEANS_MAX_ITER = 50
REDRAWS = 10
# |det| / (product of row norms) below this is treated as singular
SINGULAR_TOL = 1e-12


class DegeneratePlane(ValueError):
    pass


class PlaneNormal(NamedTuple):
    n1: float
    n2: float
    n3: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


class FitStatus(str, Enum):
    OK = "ok"
    DEGENERATE = "degenerate"
    INSUFFICIENT = "insufficient-support"


@dataclass(frozen=True)
class RansacParams:
    window_n: int = 5
    delta: float = 0.25
    inlier_eps: float = 0.01
    iterations: int = 100
    min_inliers: int = 3
    seed: int = 0
    exhaustive: bool = False

    def __post_init__(self):
        if self.window_n < 3 or self.window_n % 2 == 0:
            raise ValueError(f"window_n must be odd and >= 3, got {self.window_n}")
        if not 0 <= self.delta < 0.5:
            raise ValueError(f"delta must lie in [0, 0.5), got {self.delta}")
        if not self.inlier_eps > 0:
            raise ValueError("inlier_eps must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.min_inliers < 0:
            raise ValueError("min_inliers must be >= 0")


@dataclass(frozen=True, eq=False)
class FitResult:
    normal: PlaneNormal | None
    inlier_mask: np.ndarray
    inlier_count: int
    status: FitStatus
    candidate_mask: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status is FitStatus.OK


# ------------------------------------------------------------------ k-means

def kmeans_partition(window: SaeWindow) -> np.ndarray:
    """Two-cluster 1-D k-means over the window timestamps.

    Never-fired cells count as time 0. Centroids start at the minimum and the
    centre timestamp; ties go to the larger centroid. Returns the mask of the
    cluster holding the centre pixel.
    """
    v = np.nan_to_num(window.timestamps, nan=0.0).ravel()
    lo, hi = float(v.min()), float(window.center_time)
    to_hi = None
    for _ in range(KMEANS_MAX_ITER):
        if lo > hi:
            lo, hi = hi, lo
            to_hi = None if to_hi is None else ~to_hi
        new = np.abs(v - hi) <= np.abs(v - lo)
        if to_hi is not None and np.array_equal(new, to_hi):
            break
        to_hi = new
        k = int(to_hi.sum())
        total = float(v.sum())
        s_hi = float(v[to_hi].sum())
        if k:
            hi = s_hi / k
        if k < len(v):
            lo = (total - s_hi) / (len(v) - k)
    r = window.radius
    centre = r * window.n + r
    mask = to_hi if to_hi[centre] else ~to_hi
    return mask.reshape(window.n, window.n)


# ------------------------------------------------------------ plane algebra

def _cross(u, v):
    u0, u1, u2 = u[..., 0], u[..., 1], u[..., 2]
    v0, v1, v2 = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([u1 * v2 - u2 * v1, u2 * v0 - u0 * v2, u0 * v1 - u1 * v0], axis=-1)


def _cramer(a, b, c):
    """Batched solution of [a; b; c] n = 1 and a singular-row flag."""
    bc = _cross(b, c)
    det = (a * bc).sum(axis=-1)
    scale = np.sqrt((a * a).sum(-1) * (b * b).sum(-1) * (c * c).sum(-1))
    bad = ~(np.abs(det) > SINGULAR_TOL * scale)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        n = (bc + _cross(c, a) + _cross(a, b)) / det[..., None]
    bad = bad | ~np.isfinite(n).all(axis=-1)
    n[bad] = np.nan
    return n, bad


def plane_from_three_points(p1, p2, p3) -> PlaneNormal:
    """Normal of the plane ``n . p = 1`` through three (x, y, t) points."""
    m = np.array([p1, p2, p3], dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("expected three finite (x, y, t) points")
    n, bad = _cramer(m[0], m[1], m[2])
    if bad:
        raise DegeneratePlane("points are collinear or the plane passes through the origin")
    return PlaneNormal(*n.tolist())


def intra_pixel_distance(normal, pixel, t, delta):
    """Distance from the plane to the nearest point of the pixel box.

    The box is ``(x +- delta, y +- delta)`` at fixed ``t``; the plane residual
    is affine in the box so its minimum magnitude is ``|a| - delta*(|n1|+|n2|)``
    clipped at zero. Distances are ``|n.z - 1| / |n|^2``. Broadcasts over
    arrays of pixels/times.
    """
    n1, n2, n3 = (np.asarray(c, dtype=np.float64) for c in normal)
    x, y = (np.asarray(c, dtype=np.float64) for c in pixel)
    a = n1 * x + n2 * y + n3 * np.asarray(t, dtype=np.float64) - 1.0
    slack = np.asarray(delta, dtype=np.float64) * (np.abs(n1) + np.abs(n2))
    d = np.maximum(np.abs(a) - slack, 0.0) / (n1 * n1 + n2 * n2 + n3 * n3)
    return float(d) if np.ndim(d) == 0 else d


# ------------------------------------------------------------------ RANSAC

def fit_frame_points(window: SaeWindow):
    """Window pixels as (x, y, t) in the fitting frame, shape (n, n, 3)."""
    r = window.radius
    off = np.arange(window.n, dtype=np.float64) - r
    xs, ys = np.meshgrid(off, off)
    ts = window.timestamps - window.center_time + ANCHOR_TIME
    return np.stack([xs, ys, ts], axis=-1)


def _draw_pairs(rng: np.random.Generator, m: int, iterations: int) -> np.ndarray:
    """(iterations, REDRAWS, 2) index pairs, distinct within each pair."""
    first = rng.integers(0, m, size=(iterations, REDRAWS))
    second = rng.integers(0, m - 1, size=(iterations, REDRAWS))
    second = second + (second >= first)
    return np.stack([first, second], axis=-1)


def _solve_planes(anchor, pa, pb):
    """Batched normals through anchor/pa/pb; rows flagged singular are NaN."""
    return _cramer(np.broadcast_to(anchor, pa.shape), pa, pb)


def _spread(pts, pairs):
    """Twice the xy triangle area spanned by the anchor and each sampled pair."""
    a, b = pts[pairs[:, 0]], pts[pairs[:, 1]]
    return np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def _hypotheses(anchor, pts, params: RansacParams, rng):
    m = len(pts)
    if params.exhaustive:
        pairs = np.array(list(combinations(range(m), 2)), dtype=np.int64).reshape(-1, 2)
        normals, bad = _solve_planes(anchor, pts[pairs[:, 0]], pts[pairs[:, 1]])
        return normals[~bad], _spread(pts, pairs)[~bad]
    pairs = _draw_pairs(rng, m, params.iterations).reshape(-1, 2)
    normals, bad = _solve_planes(anchor, pts[pairs[:, 0]], pts[pairs[:, 1]])
    normals = normals.reshape(params.iterations, REDRAWS, 3)
    bad = bad.reshape(params.iterations, REDRAWS)
    good_any = ~bad.all(axis=1)
    first_good = np.argmax(~bad, axis=1)
    pick = np.arange(params.iterations) * REDRAWS + first_good
    return (normals[np.arange(params.iterations), first_good][good_any],
            _spread(pts, pairs[pick])[good_any])


def score_planes(normals: np.ndarray, pts: np.ndarray, deltas: np.ndarray, eps: float):
    """Inlier matrix (planes x points) under the intra-pixel distance."""
    n1, n2, n3 = (normals[:, k:k + 1] for k in range(3))
    a = n1 * pts[:, 0] + n2 * pts[:, 1] + n3 * pts[:, 2] - 1.0
    slack = deltas * (np.abs(n1) + np.abs(n2))
    d = np.maximum(np.abs(a) - slack, 0.0) / (n1 * n1 + n2 * n2 + n3 * n3)
    return d < eps


def classify_window(window: SaeWindow, normal, delta: float, eps: float) -> np.ndarray:
    """Inlier mask over every fired pixel for a plane in the fitting frame."""
    frame = fit_frame_points(window)
    r = window.radius
    deltas = np.full((window.n, window.n), float(delta))
    deltas[r, r] = 0.0
    pts = frame.reshape(-1, 3)
    pts = np.where(np.isnan(pts), 0.0, pts)
    inl = score_planes(np.asarray(normal, dtype=np.float64).reshape(1, 3), pts, deltas.ravel(), eps)
    return inl.reshape(window.n, window.n) & window.fired


def ransac_fit(window: SaeWindow, params: RansacParams = RansacParams(),
               rng: np.random.Generator | None = None) -> FitResult:
    """Best plane by intra-pixel inlier count.

    Among equally scored hypotheses the one whose sample spans the largest
    xy triangle wins (best conditioned); remaining ties go to the earliest
    draw. The returned normal lives in the fitting frame (see module
    docstring).
    """
    n = window.n
    r = window.radius
    empty = np.zeros((n, n), dtype=bool)
    candidates = kmeans_partition(window) & window.fired
    if candidates.sum() < 3:
        return FitResult(None, empty, 0, FitStatus.INSUFFICIENT, candidates)

    frame = fit_frame_points(window)
    others = candidates.copy()
    others[r, r] = False
    rows, cols = np.nonzero(others)
    pts = frame[rows, cols]
    anchor = frame[r, r]

    if rng is None:
        rng = np.random.default_rng(params.seed)
    normals, spread = _hypotheses(anchor, pts, params, rng)
    if len(normals) == 0:
        return FitResult(None, empty, 0, FitStatus.DEGENERATE, candidates)

    # the anchor is scored at its pixel centre; past events float in their box
    all_pts = np.vstack([anchor, pts])
    deltas = np.full(len(all_pts), params.delta)
    deltas[0] = 0.0
    inliers = score_planes(normals, all_pts, deltas, params.inlier_eps)
    scores = inliers.sum(axis=1)
    top = np.flatnonzero(scores == scores.max())
    best = int(top[np.argmax(spread[top])])

    mask = empty.copy()
    mask[rows, cols] = inliers[best, 1:]
    mask[r, r] = inliers[best, 0]
    count = int(mask.sum())
    status = FitStatus.OK if count >= params.min_inliers + 1 and mask[r, r] else FitStatus.INSUFFICIENT
    return FitResult(PlaneNormal(*normals[best].tolist()), mask, count, status, candidates)

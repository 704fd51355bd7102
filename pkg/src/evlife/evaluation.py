"""Edge-map similarity (CDM), inlier F-measure, lifetime statistics and the
synthetic-window noise sweeps."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Sequence

import numpy as np

from .events_io import EdgeImage, Event
from .lifetime import LifetimedEvent, lifetime_from_normal
from .plane_fit import PlaneNormal, RansacParams, classify_window, ransac_fit
from .synth import NoiseSpec, gen_planar_window


@dataclass(frozen=True)
class CdmParams:
    eta: int = 3

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")


@dataclass(frozen=True)
class CdmReport:
    score: float
    matched_pairs: int
    unmatched_f: int
    unmatched_g: int
    union_size: int
    cost: float


def candidate_pairs(f: np.ndarray, g: np.ndarray, eta: int):
    """All (d, i, j) with f-pixel i and g-pixel j within chessboard distance eta.

    Pixels are numbered in row-major order of ``np.nonzero``.
    """
    fy, fx = np.nonzero(f)
    h, w = g.shape
    gidx = np.full(g.shape, -1, dtype=np.int64)
    gidx[g] = np.arange(int(g.sum()))
    ds, fi, gj = [], [], []
    for dy in range(-eta, eta + 1):
        for dx in range(-eta, eta + 1):
            y, x = fy + dy, fx + dx
            ok = (y >= 0) & (y < h) & (x >= 0) & (x < w)
            idx = np.flatnonzero(ok)
            j = gidx[y[idx], x[idx]]
            hit = j >= 0
            fi.append(idx[hit])
            gj.append(j[hit])
            ds.append(np.full(int(hit.sum()), max(abs(dx), abs(dy))))
    return np.concatenate(ds), np.concatenate(fi), np.concatenate(gj)


def matching_cost(d: np.ndarray, eta: int) -> np.ndarray:
    return d / eta if eta > 0 else np.zeros(len(d))


def cdm(f: EdgeImage, g: EdgeImage, params: CdmParams = CdmParams()) -> CdmReport:
    """Closest-distance similarity in [0, 100].

    Pairs within ``eta`` are matched one-to-one, closest first (ties by
    f-pixel then g-pixel, row-major). A match costs ``d / eta``; every
    unmatched edge pixel in either image costs 1.
    """
    if f.geometry != g.geometry:
        raise ValueError(f"geometry mismatch: {f.geometry} vs {g.geometry}")
    nf, ng = f.count, g.count
    union = int((f.mask | g.mask).sum())
    if union == 0:
        return CdmReport(100.0, 0, 0, 0, 0, 0.0)

    d, fi, gj = candidate_pairs(f.mask, g.mask, params.eta)
    order = np.lexsort((gj, fi, d))
    used_f = np.zeros(nf, dtype=bool)
    used_g = np.zeros(ng, dtype=bool)
    matched_cost = 0.0
    matched = 0
    step = matching_cost(d, params.eta)
    for k in order.tolist():
        i, j = fi[k], gj[k]
        if used_f[i] or used_g[j]:
            continue
        used_f[i] = used_g[j] = True
        matched += 1
        matched_cost += step[k]

    um_f, um_g = nf - matched, ng - matched
    cost = matched_cost + um_f + um_g
    score = min(max(100.0 * (1.0 - cost / union), 0.0), 100.0)
    return CdmReport(score, matched, um_f, um_g, union, cost)


def f_measure(predicted, truth) -> tuple[float, float, float]:
    """(recall, precision, F) of a boolean prediction against a boolean truth."""
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape:
        raise ValueError("shape mismatch")
    tp = int((predicted & truth).sum())
    fp = int((predicted & ~truth).sum())
    fn = int((~predicted & truth).sum())
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f = 2 * recall * precision / (recall + precision) if recall + precision else 0.0
    return recall, precision, f


# --------------------------------------------------------------- lifetimes

@dataclass(frozen=True, eq=False)
class LifetimeStats:
    mean_abs_error: float
    n_scored: int
    bin_edges: np.ndarray
    counts: np.ndarray

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_start", "bin_end", "count"])
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
        return buf.getvalue()


def _truth_lookup(truth, estimates):
    if isinstance(truth, Mapping):
        def get(i, e):
            try:
                return truth[e]
            except KeyError:
                raise KeyError(f"no ground truth for event {e}") from None
        return get
    truth = np.asarray(truth, dtype=np.float64)
    if len(truth) != len(estimates):
        raise KeyError(f"truth has {len(truth)} entries for {len(estimates)} estimates")
    return lambda i, e: truth[i]


def lifetime_histogram(taus, bin_width: float = 0.001):
    taus = np.asarray(taus, dtype=np.float64)
    if len(taus) == 0:
        return np.array([0.0, bin_width]), np.zeros(1, dtype=np.int64)
    lo = math.floor(taus.min() / bin_width)
    hi = max(math.floor(taus.max() / bin_width) + 1, lo + 1)
    edges = np.round(np.arange(lo, hi + 1) * bin_width, 12)
    counts, _ = np.histogram(taus, bins=edges)
    return edges, counts


def lifetime_stats(estimates: Sequence[LifetimedEvent], truth: Mapping[Event, float] | Sequence[float],
                   bin_width: float = 0.001) -> LifetimeStats:
    """Mean |tau - truth| over ok-status estimates plus a tau histogram.

    ``truth`` is either a mapping from Event or a sequence aligned with
    ``estimates``; a NaN truth entry excludes that event (e.g. noise).
    """
    get = _truth_lookup(truth, estimates)
    errs, taus = [], []
    for i, r in enumerate(estimates):
        if not r.ok:
            continue
        ref = get(i, r.event)
        if math.isnan(ref):
            continue
        errs.append(abs(r.tau - ref))
        taus.append(r.tau)
    edges, counts = lifetime_histogram(taus, bin_width)
    mae = float(np.mean(errs)) if errs else math.nan
    return LifetimeStats(mae, len(errs), edges, counts)


def peak_mass(taus, target: float, rel: float = 0.1) -> float:
    """Fraction of ``taus`` within ``rel * target`` of ``target``."""
    taus = np.asarray(taus, dtype=np.float64)
    if len(taus) == 0:
        return 0.0
    return float(np.mean(np.abs(taus - target) <= rel * target))


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class SweepRow:
    mode: str
    sigma: float
    delta: float
    repetitions: int
    mean_recall: float
    mean_precision: float
    mean_f: float
    mean_lifetime_error: float
    n_ok: int


def sweep_fig4(mode: str, sigmas: Sequence[float], deltas: Sequence[float], repetitions: int = 1000,
               seed: int = 0, normal=PlaneNormal(-1.0, -1.0, 1.0), n: int = 5,
               scatter_fraction: float = 0.2, ransac: RansacParams = RansacParams()) -> list[SweepRow]:
    """Seed-averaged inlier F-measure and lifetime error on synthetic windows.

    Predicted inliers are all window pixels the fitted plane accepts under
    the same intra-pixel loss. Repetition ``k`` uses window seed ``seed + k``;
    its RANSAC generator is shared by every delta so the comparison across
    deltas is paired.
    Failed fits count as empty predictions and are left out of the lifetime
    error.
    """
    if mode not in ("global", "scattered"):
        raise ValueError(f"unknown mode {mode!r}")
    normal = PlaneNormal(*normal)
    rows = []
    for sigma in sigmas:
        acc = {d: ([], [], [], []) for d in deltas}
        for k in range(repetitions):
            spec = NoiseSpec(timestamp_sigma=sigma, scatter_fraction=scatter_fraction, seed=seed + k)
            pw = gen_planar_window(n, normal, spec, mode=mode, inlier_eps=ransac.inlier_eps)
            for d in deltas:
                params = RansacParams(window_n=n, delta=d, inlier_eps=ransac.inlier_eps,
                                      iterations=ransac.iterations, min_inliers=ransac.min_inliers,
                                      exhaustive=ransac.exhaustive)
                rng = np.random.default_rng(np.random.SeedSequence([seed + k, 1]))
                fit = ransac_fit(pw.window, params, rng)
                if fit.ok:
                    pred = classify_window(pw.window, fit.normal, d, ransac.inlier_eps)
                else:
                    pred = np.zeros_like(pw.truth_inliers)
                rec, prec, f = f_measure(pred, pw.truth_inliers)
                r_, p_, f_, e_ = acc[d]
                r_.append(rec)
                p_.append(prec)
                f_.append(f)
                if fit.ok:
                    e_.append(abs(lifetime_from_normal(fit.normal) - pw.true_lifetime))
        for d in deltas:
            r_, p_, f_, e_ = acc[d]
            rows.append(SweepRow(mode, float(sigma), float(d), repetitions, float(np.mean(r_)),
                                 float(np.mean(p_)), float(np.mean(f_)),
                                 float(np.mean(e_)) if e_ else math.nan, len(e_)))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(SweepRow)]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    return buf.getvalue()

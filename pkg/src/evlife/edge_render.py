"""Edge images from lifetimed events, and fixed-time / fixed-count baselines.

All renderers draw both polarities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .events_io import EdgeImage, EventStream, SensorGeometry
from .lifetime import LifetimedEvent

DEFAULT_TAU_CLAMP = 0.5


@dataclass(frozen=True)
class RenderQuery:
    at_time: float
    tau_clamp: float = DEFAULT_TAU_CLAMP

    def __post_init__(self):
        if self.at_time < 0:
            raise ValueError("at_time must be >= 0")
        if not self.tau_clamp > 0:
            raise ValueError("tau_clamp must be positive")


def _columns(events: Sequence[LifetimedEvent]):
    n = len(events)
    t = np.fromiter((r.event.t for r in events), dtype=np.float64, count=n)
    x = np.fromiter((r.event.x for r in events), dtype=np.int64, count=n)
    y = np.fromiter((r.event.y for r in events), dtype=np.int64, count=n)
    tau = np.fromiter((r.tau if r.ok else np.nan for r in events), dtype=np.float64, count=n)
    return t, x, y, tau


def render_lifetime(events: Sequence[LifetimedEvent], q: RenderQuery, geometry: SensorGeometry) -> EdgeImage:
    """Pixels holding an event that is still alive at ``q.at_time``.

    An ok-status event at time ``t`` is alive on ``[t, t + min(tau, tau_clamp))``.
    """
    mask = np.zeros(geometry.shape, dtype=bool)
    if len(events):
        t, x, y, tau = _columns(events)
        life = np.minimum(tau, q.tau_clamp)
        alive = (t <= q.at_time) & (q.at_time < t + life)  # NaN tau compares False
        mask[y[alive], x[alive]] = True
    return EdgeImage(geometry, mask)


def accumulate_time(stream: EventStream, at_time: float, window: float,
                    geometry: SensorGeometry | None = None) -> EdgeImage:
    """Pixels with any event in ``(at_time - window, at_time]``."""
    if not window > 0:
        raise ValueError("window must be positive")
    geometry = geometry or stream.geometry
    lo = np.searchsorted(stream.t, at_time - window, side="right")
    hi = np.searchsorted(stream.t, at_time, side="right")
    mask = np.zeros(geometry.shape, dtype=bool)
    mask[stream.y[lo:hi], stream.x[lo:hi]] = True
    return EdgeImage(geometry, mask)


def accumulate_count(stream: EventStream, at_time: float, count: int,
                     geometry: SensorGeometry | None = None) -> EdgeImage:
    """Pixels hosting one of the last ``count`` events at or before ``at_time``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    geometry = geometry or stream.geometry
    hi = np.searchsorted(stream.t, at_time, side="right")
    lo = max(hi - count, 0)
    mask = np.zeros(geometry.shape, dtype=bool)
    mask[stream.y[lo:hi], stream.x[lo:hi]] = True
    return EdgeImage(geometry, mask)


def count_window_span(stream: EventStream, at_time: float, count: int) -> float:
    """Time covered by the events ``accumulate_count`` would draw."""
    hi = np.searchsorted(stream.t, at_time, side="right")
    lo = max(hi - count, 0)
    if hi == lo:
        return 0.0
    return float(stream.t[hi - 1] - stream.t[lo])


def lifetime_map(events: Sequence[LifetimedEvent], geometry: SensorGeometry,
                 tau_range: tuple[float, float], tau_clamp: float = DEFAULT_TAU_CLAMP) -> np.ndarray:
    """Per-pixel mean lifetime scaled linearly from ``tau_range`` to 0..255.

    Pixels without an ok estimate are 0.
    """
    lo, hi = tau_range
    if not hi > lo:
        raise ValueError("tau_range must be increasing")
    total = np.zeros(geometry.shape)
    hits = np.zeros(geometry.shape, dtype=np.int64)
    if len(events):
        t, x, y, tau = _columns(events)
        ok = ~np.isnan(tau)
        np.add.at(total, (y[ok], x[ok]), np.minimum(tau[ok], tau_clamp))
        np.add.at(hits, (y[ok], x[ok]), 1)
    gray = np.zeros(geometry.shape, dtype=np.uint8)
    seen = hits > 0
    mean = total[seen] / hits[seen]
    gray[seen] = np.rint(np.clip((mean - lo) / (hi - lo), 0.0, 1.0) * 255).astype(np.uint8)
    return gray

"""Event buffer: drop events with no same-polarity neighbour activity nearby in time."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .events_io import EventStream


class FilterMode(str, Enum):
    CAUSAL = "causal-past"
    SYMMETRIC = "symmetric-delayed"


@dataclass(frozen=True)
class FilterParams:
    tau_min: float = 0.01
    mode: FilterMode = FilterMode.SYMMETRIC
    neighborhood: int = 1

    def __post_init__(self):
        if not self.tau_min > 0:
            raise ValueError(f"tau_min must be positive, got {self.tau_min}")
        if self.neighborhood < 1:
            raise ValueError("neighborhood radius must be >= 1")
        object.__setattr__(self, "mode", FilterMode(self.mode))


def _ring_offsets(radius: int):
    return [(dx, dy) for dy in range(-radius, radius + 1)
            for dx in range(-radius, radius + 1) if (dx, dy) != (0, 0)]


def _past_support(t, x, y, p, shape, radius, tau_min):
    """True where a neighbour fired earlier in stream order within tau_min."""
    h, w = shape
    # padded per-polarity surface of latest timestamps
    last = np.full((2, h + 2 * radius, w + 2 * radius), -np.inf)
    offsets = _ring_offsets(radius)
    support = np.zeros(len(t), dtype=bool)
    for i in range(len(t)):
        ti, xi, yi, pi = t[i], x[i] + radius, y[i] + radius, p[i]
        surf = last[pi]
        lo = ti - tau_min
        for dx, dy in offsets:
            if surf[yi + dy, xi + dx] >= lo:
                support[i] = True
                break
        surf[yi, xi] = ti
    return support


def support_mask(stream: EventStream, params: FilterParams = FilterParams()) -> np.ndarray:
    """Boolean keep-mask over ``stream``."""
    n = len(stream)
    if n == 0:
        return np.zeros(0, dtype=bool)
    t = stream.t.tolist()
    x = stream.x.tolist()
    y = stream.y.tolist()
    p = stream.p.astype(int).tolist()
    shape = stream.geometry.shape
    keep = _past_support(t, x, y, p, shape, params.neighborhood, params.tau_min)
    if params.mode is FilterMode.SYMMETRIC:
        # later events: replay reversed with negated time, so "latest" becomes
        # "earliest upcoming" and the same past-window test applies
        rev = _past_support([-v for v in reversed(t)], x[::-1], y[::-1], p[::-1],
                            shape, params.neighborhood, params.tau_min)
        keep |= rev[::-1]
    return keep


def filter_events(stream: EventStream, params: FilterParams = FilterParams()) -> EventStream:
    return stream.select(support_mask(stream, params))

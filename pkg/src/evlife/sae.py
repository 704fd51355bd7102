"""Per-polarity Surfaces of Active Events and local window extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events_io import Event, SensorGeometry

# Sentinel for a pixel that has never fired.
NEVER = np.nan

DEFAULT_WINDOW = 5


@dataclass(frozen=True, eq=False)
class SaeWindow:
    """n x n snapshot of one polarity surface around an event.

    ``timestamps[j, i]`` is the pixel at column ``cx - r + i``, row
    ``cy - r + j`` (``r = n // 2``); never-fired and off-sensor cells hold NaN.
    """

    center: tuple[int, int]
    n: int
    timestamps: np.ndarray
    center_time: float

    def __post_init__(self):
        if self.n < 1 or self.n % 2 == 0:
            raise ValueError(f"window size must be odd and positive, got {self.n}")
        ts = np.array(self.timestamps, dtype=np.float64)
        if ts.shape != (self.n, self.n):
            raise ValueError(f"timestamps must be {self.n}x{self.n}, got {ts.shape}")
        r = self.n // 2
        if ts[r, r] != self.center_time:
            raise ValueError("center cell must equal center_time")
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)

    @property
    def radius(self) -> int:
        return self.n // 2

    @property
    def fired(self) -> np.ndarray:
        return ~np.isnan(self.timestamps)


class Sae:
    """Latest timestamp per pixel, one surface per polarity.

    ``surfaces[1]`` is the positive surface, ``surfaces[0]`` the negative one.
    """

    def __init__(self, geometry: SensorGeometry):
        self.geometry = geometry
        self.surfaces = np.full((2, geometry.height, geometry.width), NEVER)
        self.latest = -np.inf

    @property
    def surface_pos(self) -> np.ndarray:
        return self.surfaces[1]

    @property
    def surface_neg(self) -> np.ndarray:
        return self.surfaces[0]

    def update(self, e: Event) -> "Sae":
        if not (0 <= e.x < self.geometry.width and 0 <= e.y < self.geometry.height):
            raise IndexError(f"event pixel ({e.x}, {e.y}) outside {self.geometry}")
        surf = self.surfaces[int(e.p)]
        prev = surf[e.y, e.x]
        if prev > e.t:
            raise ValueError(f"timestamp {e.t} older than stored {prev} at ({e.x}, {e.y})")
        surf[e.y, e.x] = e.t
        self.latest = max(self.latest, e.t)
        return self

    def window(self, e: Event, n: int = DEFAULT_WINDOW) -> SaeWindow:
        if n < 1 or n % 2 == 0:
            raise ValueError(f"window size must be odd and positive, got {n}")
        r = n // 2
        surf = self.surfaces[int(e.p)]
        h, w = surf.shape
        out = np.full((n, n), NEVER)
        x0, x1 = max(e.x - r, 0), min(e.x + r + 1, w)
        y0, y1 = max(e.y - r, 0), min(e.y + r + 1, h)
        out[y0 - (e.y - r): y1 - (e.y - r), x0 - (e.x - r): x1 - (e.x - r)] = surf[y0:y1, x0:x1]
        return SaeWindow((e.x, e.y), n, out, float(out[r, r]))


def window(sae: Sae, e: Event, n: int = DEFAULT_WINDOW) -> SaeWindow:
    return sae.window(e, n)


def update(sae: Sae, e: Event) -> Sae:
    return sae.update(e)

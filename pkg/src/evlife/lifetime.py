"""Visual flow and lifetime from plane normals, and the event-by-event pipeline."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .buffer_filter import FilterParams, support_mask
from .events_io import Event, EventFormatError, EventStream, SensorGeometry
from .plane_fit import FitStatus, RansacParams, ransac_fit
from .sae import Sae

FILTERED = "filtered"
CSV_HEADER = ["t", "x", "y", "p", "tau", "vx", "vy", "status"]


class LifetimedEvent(NamedTuple):
    event: Event
    tau: float  # NaN unless fit_status == "ok"
    vx: float
    vy: float
    fit_status: str

    @property
    def ok(self) -> bool:
        return self.fit_status == FitStatus.OK.value


def flow_from_normal(n) -> tuple[float, float]:
    """``(vx, vy) = (-n3/n1, -n3/n2)``; a zero denominator gives ``inf``."""
    n1, n2, n3 = (float(c) for c in n)

    def ratio(den):
        if den == 0.0:
            return math.inf
        return -n3 / den

    return ratio(n1), ratio(n2)


def lifetime_from_normal(n) -> float:
    """``sqrt(n1^2 + n2^2) / |n3|``: time for the edge to cross one pixel."""
    n1, n2, n3 = (float(c) for c in n)
    if n3 == 0.0:
        raise ValueError("n3 = 0: plane is vertical in time, lifetime undefined")
    g = math.hypot(n1, n2)
    if g == 0.0:
        raise ValueError("n1 = n2 = 0: flat surface, no motion")
    return g / abs(n3)


def event_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, index])


def _fit_one(args):
    window, params, index = args
    rng = np.random.default_rng(event_seed(params.seed, index))
    fit = ransac_fit(window, params, rng)
    if not fit.ok:
        return math.nan, math.nan, math.nan, fit.status.value
    try:
        tau = lifetime_from_normal(fit.normal)
    except ValueError:
        return math.nan, math.nan, math.nan, FitStatus.DEGENERATE.value
    vx, vy = flow_from_normal(fit.normal)
    return tau, vx, vy, fit.status.value


def process_stream(stream: EventStream, filter_params: FilterParams | None = FilterParams(),
                   ransac_params: RansacParams = RansacParams(),
                   threads: int = 1) -> list[LifetimedEvent]:
    """Filter, then fit a plane at every surviving event in stream order.

    One output record per input event. Events removed by the buffer carry
    status ``"filtered"``. Each fit uses a generator seeded from
    ``(ransac_params.seed, input index)`` so results do not depend on
    ``threads``.
    """
    n = len(stream)
    if n == 0:
        return []
    if filter_params is None:
        keep = np.ones(n, dtype=bool)
    else:
        keep = support_mask(stream, filter_params)

    sae = Sae(stream.geometry)
    jobs = []
    for i in np.flatnonzero(keep).tolist():
        e = stream[i]
        sae.update(e)
        jobs.append((sae.window(e, ransac_params.window_n), ransac_params, i))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(_fit_one, jobs, chunksize=256))
    else:
        fits = [_fit_one(job) for job in jobs]

    out: list[LifetimedEvent] = []
    it = iter(fits)
    for i in range(n):
        e = stream[i]
        if keep[i]:
            out.append(LifetimedEvent(e, *next(it)))
        else:
            out.append(LifetimedEvent(e, math.nan, math.nan, math.nan, FILTERED))
    return out


# ---------------------------------------------------------------- CSV I/O

def _fmt(v: float) -> str:
    return repr(float(v))


def write_lifetimes_csv(records: Iterable[LifetimedEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        e = r.event
        w.writerow([_fmt(e.t), e.x, e.y, int(e.p), _fmt(r.tau), _fmt(r.vx), _fmt(r.vy), r.fit_status])
    return buf.getvalue()


def read_lifetimes_csv(text: str) -> list[LifetimedEvent]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header != CSV_HEADER:
        raise EventFormatError(f"expected header {','.join(CSV_HEADER)}")
    out = []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        try:
            t, x, y, p, tau, vx, vy, status = row
            e = Event(float(t), int(x), int(y), int(p) == 1)
            out.append(LifetimedEvent(e, float(tau), float(vx), float(vy), status))
        except ValueError:
            raise EventFormatError(f"line {lineno}: cannot parse {row!r}") from None
    return out


def records_geometry(records: Sequence[LifetimedEvent]) -> SensorGeometry:
    """Smallest geometry containing every record."""
    if not records:
        return SensorGeometry(1, 1)
    return SensorGeometry(max(r.event.x for r in records) + 1, max(r.event.y for r in records) + 1)

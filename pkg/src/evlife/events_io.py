"""Event stream and edge image containers plus their text/PGM file formats.

Events are stored column-wise (``t``, ``x``, ``y``, ``p`` numpy arrays) so the
filters and renderers can work on whole streams at once; indexing a stream
returns a single :class:`Event`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np


class EventFormatError(ValueError):
    """Malformed or invariant-violating event data."""


class PgmError(ValueError):
    """Unsupported or corrupt PGM data."""


class Event(NamedTuple):
    t: float
    x: int
    y: int
    p: bool  # True = positive (log-intensity increase)


@dataclass(frozen=True)
class SensorGeometry:
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError(f"invalid geometry {self.width}x{self.height}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def contains(self, x, y):
        return (x >= 0) & (x < self.width) & (y >= 0) & (y < self.height)

    @classmethod
    def parse(cls, text: str) -> "SensorGeometry":
        m = re.fullmatch(r"\s*(\d+)\s*[xX,]\s*(\d+)\s*", text)
        if not m:
            raise ValueError(f"geometry must look like WIDTHxHEIGHT, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self):
        return f"{self.width}x{self.height}"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class EventStream:
    """Time-ordered, geometry-bounded sequence of events.

    The constructor validates every invariant, so any ``EventStream`` that
    exists is a valid one.
    """

    __slots__ = ("geometry", "t", "x", "y", "p")

    def __init__(self, geometry: SensorGeometry, t, x, y, p):
        t = np.asarray(t, dtype=np.float64).reshape(-1)
        x = np.asarray(x, dtype=np.int64).reshape(-1)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        p = np.asarray(p, dtype=bool).reshape(-1)
        if not (len(t) == len(x) == len(y) == len(p)):
            raise EventFormatError("column lengths differ")
        if len(t):
            bad = np.flatnonzero(~np.isfinite(t) | (t < 0))
            if len(bad):
                raise EventFormatError(f"invalid timestamp at index {bad[0]}")
            bad = np.flatnonzero(~geometry.contains(x, y))
            if len(bad):
                i = bad[0]
                raise EventFormatError(
                    f"coordinate ({x[i]}, {y[i]}) out of bounds for {geometry} at index {i}"
                )
            bad = np.flatnonzero(np.diff(t) < 0)
            if len(bad):
                raise EventFormatError(f"decreasing timestamp at index {bad[0] + 1}")
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "p", _frozen(p))

    def __setattr__(self, name, value):
        raise AttributeError("EventStream is immutable")

    @classmethod
    def from_events(cls, geometry: SensorGeometry, events: Iterable[Event]) -> "EventStream":
        events = list(events)
        if not events:
            return cls.empty(geometry)
        t, x, y, p = zip(*events)
        return cls(geometry, t, x, y, p)

    @classmethod
    def empty(cls, geometry: SensorGeometry) -> "EventStream":
        return cls(geometry, [], [], [], [])

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i):
        if isinstance(i, slice) or isinstance(i, np.ndarray):
            return EventStream(self.geometry, self.t[i], self.x[i], self.y[i], self.p[i])
        return Event(float(self.t[i]), int(self.x[i]), int(self.y[i]), bool(self.p[i]))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self):
        return f"EventStream({self.geometry}, n={len(self)})"

    def select(self, mask) -> "EventStream":
        """Subsequence of events where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        return self[mask]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self) else 0.0


@dataclass(frozen=True, eq=False)
class EdgeImage:
    geometry: SensorGeometry
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.geometry.shape:
            raise ValueError(f"mask shape {mask.shape} does not match {self.geometry}")
        object.__setattr__(self, "mask", _frozen(mask))

    @classmethod
    def blank(cls, geometry: SensorGeometry) -> "EdgeImage":
        return cls(geometry, np.zeros(geometry.shape, dtype=bool))

    def __eq__(self, other):
        if not isinstance(other, EdgeImage):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(self.mask, other.mask)

    @property
    def count(self) -> int:
        return int(self.mask.sum())


# ---------------------------------------------------------------- event text

def parse_event_text(text: str, geometry: SensorGeometry) -> EventStream:
    """Parse ``t x y p`` lines; blank lines and ``#`` comments are skipped."""
    t, x, y, p = [], [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 4:
            raise EventFormatError(f"line {lineno}: expected 4 fields, got {len(fields)}")
        try:
            ti = float(fields[0])
            xi = int(fields[1])
            yi = int(fields[2])
            pi = int(fields[3])
        except ValueError:
            raise EventFormatError(f"line {lineno}: cannot parse {line!r}") from None
        if pi not in (0, 1):
            raise EventFormatError(f"line {lineno}: polarity must be 0 or 1, got {pi}")
        if not np.isfinite(ti) or ti < 0:
            raise EventFormatError(f"line {lineno}: invalid timestamp {fields[0]}")
        t.append(ti)
        x.append(xi)
        y.append(yi)
        p.append(pi == 1)
    return EventStream(geometry, t, x, y, p)


def write_event_text(stream: EventStream) -> str:
    # repr() is the shortest string that round-trips a float exactly
    return "".join(
        f"{float(t)!r} {x} {y} {int(p)}\n"
        for t, x, y, p in zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist())
    )


def load_events(path, geometry: SensorGeometry) -> EventStream:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_event_text(fh.read(), geometry)


def save_events(path, stream: EventStream) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_event_text(stream))


# ---------------------------------------------------------------------- PGM

_PGM_TOKEN = re.compile(rb"#[^\n]*|(\S+)")


def _pgm_header(data: bytes):
    """Return (magic, width, height, maxval, payload offset)."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = _PGM_TOKEN.search(data, pos)
        if m is None:
            raise PgmError("truncated header")
        pos = m.end()
        if m.group(1) is not None:
            tokens.append(m.group(1))
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported magic number {magic[:2]!r}")
    try:
        width, height, maxval = (int(tok) for tok in tokens[1:])
    except ValueError:
        raise PgmError("non-numeric header field") from None
    if width < 1 or height < 1:
        raise PgmError(f"invalid dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise PgmError(f"unsupported maxval {maxval}")
    return magic, width, height, maxval, pos


def read_pgm_gray(data: bytes) -> tuple[np.ndarray, int]:
    """Decode a P2/P5 graymap into a (height, width) uint8 array and its maxval."""
    magic, width, height, maxval, pos = _pgm_header(data)
    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates header and raster
        raster = data[pos + 1: pos + 1 + n]
        if pos >= len(data) or len(raster) < n:
            raise PgmError(f"truncated payload: expected {n} bytes")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        fields = data[pos:].split()
        if len(fields) < n:
            raise PgmError(f"truncated payload: expected {n} values, got {len(fields)}")
        try:
            values = np.array([int(v) for v in fields[:n]], dtype=np.int64)
        except ValueError:
            raise PgmError("non-numeric pixel value") from None
        if values.min(initial=0) < 0:
            raise PgmError("negative pixel value")
    if values.max(initial=0) > maxval:
        raise PgmError(f"pixel value exceeds maxval {maxval}")
    return values.astype(np.uint8).reshape(height, width), maxval


def read_pgm(data: bytes) -> EdgeImage:
    gray, maxval = read_pgm_gray(data)
    # threshold is 127 on the 0..255 scale
    mask = gray.astype(np.int64) * 255 > 127 * maxval
    h, w = mask.shape
    return EdgeImage(SensorGeometry(w, h), mask)


def write_pgm_gray(gray: np.ndarray) -> bytes:
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError("expected a 2-D array")
    h, w = gray.shape
    raster = np.clip(gray, 0, 255).astype(np.uint8)
    return b"P5\n%d %d\n255\n" % (w, h) + raster.tobytes()


def write_pgm(image: EdgeImage) -> bytes:
    return write_pgm_gray(np.where(image.mask, 255, 0))


def load_pgm(path) -> EdgeImage:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def save_pgm(path, image: EdgeImage) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(image))

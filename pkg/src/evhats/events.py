"""Event data model: single events, sensor geometry and validated streams.

Streams are stored column-wise (``x``, ``y``, ``t``, ``p`` numpy arrays) and
frozen after validation, so they can be shared between threads freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

ON = 1
OFF = -1

T_MAX = np.iinfo(np.int64).max


class EventError(ValueError):
    """Base class for malformed event data."""


class NonMonotonicTimestamps(EventError):
    def __init__(self, index: int, prev: int, cur: int):
        self.index = index
        super().__init__(f"timestamp decreases at index {index}: {prev} -> {cur}")


class OutOfBoundsPixel(EventError):
    def __init__(self, index: int, x: int, y: int, width: int, height: int):
        self.index = index
        super().__init__(f"pixel ({x}, {y}) at index {index} outside {width}x{height} grid")


class InvalidPolarity(EventError):
    def __init__(self, index: int, p: int):
        self.index = index
        super().__init__(f"polarity {p} at index {index} is not -1 or +1")


class InvalidTimestamp(EventError):
    def __init__(self, index: int, t: int):
        self.index = index
        super().__init__(f"negative timestamp {t} at index {index}")


class Event(NamedTuple):
    x: int
    y: int
    t: int
    p: int


@dataclass(frozen=True)
class SensorGeometry:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"geometry must be at least 1x1, got {self.width}x{self.height}")

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    if a.flags.writeable:
        a = a.copy()
        a.flags.writeable = False
    return a


class EventStream:
    """Time-ordered, validated sequence of events on a fixed sensor grid.

    Build instances through :func:`validate_stream` (or ``EventStream.from_arrays``);
    the constructor with ``_checked=True`` is reserved for code paths that
    already guarantee the invariants.
    """

    __slots__ = ("geometry", "x", "y", "t", "p", "label")

    def __init__(self, geometry: SensorGeometry, x, y, t, p, label=None, _checked=False):
        if not _checked:
            raise TypeError("use validate_stream() or EventStream.from_arrays() to build streams")
        self.geometry = geometry
        self.x = _frozen(x, np.int64)
        self.y = _frozen(y, np.int64)
        self.t = _frozen(t, np.int64)
        self.p = _frozen(p, np.int8)
        self.label = label

    @classmethod
    def from_arrays(cls, geometry: SensorGeometry, x, y, t, p, label=None) -> "EventStream":
        return _validate_arrays(geometry, x, y, t, p, label)

    @classmethod
    def empty(cls, geometry: SensorGeometry, label=None) -> "EventStream":
        z = np.zeros(0, dtype=np.int64)
        return cls(geometry, z, z, z, np.zeros(0, np.int8), label, _checked=True)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for x, y, t, p in zip(self.x.tolist(), self.y.tolist(), self.t.tolist(), self.p.tolist()):
            yield Event(x, y, t, p)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.label == other.label
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self) -> str:
        g = self.geometry
        return f"EventStream({len(self)} events, {g.width}x{g.height}, label={self.label!r})"

    @property
    def duration(self) -> int:
        return int(self.t[-1] - self.t[0]) if len(self) else 0

    def with_label(self, label) -> "EventStream":
        return EventStream(self.geometry, self.x, self.y, self.t, self.p, label, _checked=True)

    def _subset(self, sel) -> "EventStream":
        return EventStream(
            self.geometry, self.x[sel], self.y[sel], self.t[sel], self.p[sel], self.label, _checked=True
        )


def _validate_arrays(geometry, x, y, t, p, label) -> EventStream:
    x = np.asarray(x, dtype=np.int64).ravel()
    y = np.asarray(y, dtype=np.int64).ravel()
    t = np.asarray(t, dtype=np.int64).ravel()
    p = np.asarray(p, dtype=np.int64).ravel()
    n = len(t)
    if not (len(x) == len(y) == len(p) == n):
        raise EventError("x, y, t, p must have equal lengths")

    # Report the first offending event, whatever the kind of error.
    bad = np.flatnonzero(
        (x < 0) | (x >= geometry.width) | (y < 0) | (y >= geometry.height)
        | ((p != 1) & (p != -1)) | (t < 0)
    )
    dec = np.flatnonzero(np.diff(t) < 0) + 1 if n > 1 else np.zeros(0, np.int64)
    first_bad = bad[0] if len(bad) else n
    first_dec = dec[0] if len(dec) else n
    if first_bad < n and first_bad <= first_dec:
        i = int(first_bad)
        if t[i] < 0:
            raise InvalidTimestamp(i, int(t[i]))
        if p[i] not in (1, -1):
            raise InvalidPolarity(i, int(p[i]))
        raise OutOfBoundsPixel(i, int(x[i]), int(y[i]), geometry.width, geometry.height)
    if first_dec < n:
        i = int(first_dec)
        raise NonMonotonicTimestamps(i, int(t[i - 1]), int(t[i]))
    return EventStream(geometry, x, y, t, p, label, _checked=True)


def validate_stream(raw: Iterable, geometry: SensorGeometry, label=None) -> EventStream:
    """Check a raw sequence of ``(x, y, t, p)`` tuples and freeze it into a stream.

    Nothing is reordered: an out-of-order timestamp raises
    :class:`NonMonotonicTimestamps` carrying the index of the first offender.
    """
    if isinstance(raw, EventStream):
        return _validate_arrays(geometry, raw.x, raw.y, raw.t, raw.p, label if label is not None else raw.label)
    rows = [tuple(e) for e in raw]
    if not rows:
        return EventStream.empty(geometry, label)
    for r in rows:
        if len(r) != 4:
            raise EventError(f"expected (x, y, t, p) tuples, got {r!r}")
    cols = list(zip(*rows))
    try:
        arrays = [np.array(c, dtype=np.int64) for c in cols]
    except OverflowError as exc:
        raise EventError(f"value outside 64-bit range: {exc}") from None
    return _validate_arrays(geometry, *arrays, label)


def slice_window(stream: EventStream, t_start, t_end) -> EventStream:
    """Events with ``t_start <= t < t_end``; either bound may be infinite."""
    if t_start > t_end:
        raise ValueError(f"t_start {t_start} > t_end {t_end}")
    lo = 0 if t_start <= 0 else int(np.searchsorted(stream.t, _clip_time(t_start), side="left"))
    hi = len(stream) if t_end > T_MAX else int(np.searchsorted(stream.t, _clip_time(t_end), side="left"))
    return stream._subset(slice(lo, hi))


def _clip_time(v) -> int:
    # fractional bounds: t >= 2.5 is t >= 3 on the integer grid
    return int(min(np.ceil(v), T_MAX))


def transform(stream: EventStream, dx: int = 0, dy: int = 0, dt: int = 0) -> EventStream:
    """Translate every event by ``(dx, dy)`` pixels and ``dt`` microseconds."""
    x = stream.x + dx
    y = stream.y + dy
    t = stream.t + dt
    g = stream.geometry
    out = np.flatnonzero((x < 0) | (x >= g.width) | (y < 0) | (y >= g.height))
    if len(out):
        i = int(out[0])
        raise OutOfBoundsPixel(i, int(x[i]), int(y[i]), g.width, g.height)
    neg = np.flatnonzero(t < 0)
    if len(neg):
        raise InvalidTimestamp(int(neg[0]), int(t[neg[0]]))
    return EventStream(g, x, y, t, stream.p, stream.label, _checked=True)


def concatenate(streams, geometry: Optional[SensorGeometry] = None, label=None) -> EventStream:
    """Merge several streams into one time-ordered stream (stable on ties)."""
    streams = list(streams)
    if geometry is None:
        geometry = streams[0].geometry
    if not any(len(s) for s in streams):
        return EventStream.empty(geometry, label)
    t = np.concatenate([s.t for s in streams])
    order = np.argsort(t, kind="stable")
    cat = lambda attr: np.concatenate([getattr(s, attr) for s in streams])[order]
    return _validate_arrays(geometry, cat("x"), cat("y"), t[order], cat("p"), label)

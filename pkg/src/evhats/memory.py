"""Shared per-cell memory units and the event-by-event HATS accumulator.

This is the straightforward, object-level form of the streaming algorithm:
every cell owns one memory unit; each incoming event is scored against the
unit of its own cell, added to that cell's histogram, then remembered. It
accepts any iterable of events and touches each exactly once, which makes it
the engine of choice for instrumented or truly streaming inputs. The compiled
kernel in ``_kernel`` computes the same thing on whole arrays.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Iterator

import numpy as np

from .events import Event, SensorGeometry
from .surface import local_memory_surface


class MemoryUnit:
    """Recent events relevant to one cell.

    Events are kept in one timestamp list per ``(x, y, polarity)``, in arrival
    order. A unit-wide arrival queue lets pruning drop everything older than
    ``delta_t`` (relative to the newest insertion) in amortised O(1).
    """

    def __init__(self, delta_t: float, region=None):
        self.delta_t = delta_t
        # (x0, y0, x1, y1) half-open pixel box this unit is responsible for
        self.region = region
        self.lists: dict[tuple, deque] = {}
        self._arrivals: deque = deque()

    def __len__(self) -> int:
        return len(self._arrivals)

    def covers(self, x: int, y: int) -> bool:
        if self.region is None:
            return True
        x0, y0, x1, y1 = self.region
        return x0 <= x < x1 and y0 <= y < y1

    def events(self) -> Iterator[Event]:
        """Stored events in arrival order."""
        return (Event(x, y, t, p) for (x, y, p), t in self._arrivals)

    def neighbors(self, e: Event, rho: int) -> Iterator[Event]:
        """Stored events with ``e``'s polarity within ``rho`` pixels of it."""
        for dy in range(-rho, rho + 1):
            for dx in range(-rho, rho + 1):
                key = (e.x + dx, e.y + dy, e.p)
                ts = self.lists.get(key)
                if ts:
                    for t in ts:
                        yield Event(key[0], key[1], t, e.p)

    def prune(self, now) -> None:
        cutoff = now - self.delta_t
        arr = self._arrivals
        while arr and arr[0][1] < cutoff:
            key, _ = arr.popleft()
            lst = self.lists[key]
            lst.popleft()
            if not lst:
                del self.lists[key]


def update_memory(mem: MemoryUnit, e: Event, params=None) -> None:
    """Remember ``e`` in ``mem`` and drop entries older than ``delta_t`` before it."""
    mem.prune(e.t)
    key = (e.x, e.y, e.p)
    mem.lists.setdefault(key, deque()).append(e.t)
    mem._arrivals.append((key, e.t))


class HatsAccumulator:
    """Event-at-a-time HATS computation over a cell grid.

    In ``faithful`` mode an event is stored only in its own cell's unit, so
    the surfaces ignore neighbours across a cell border. In ``exact`` mode it
    is stored in every unit whose cell, grown by ``rho`` pixels, contains it.
    """

    def __init__(self, geometry: SensorGeometry, params):
        from .hats import CellGrid

        self.params = params
        self.grid = CellGrid(geometry, params.cell_size)
        sp = params.surface
        self.hist = np.zeros((self.grid.n_cells,) + sp.shape)
        self.count = np.zeros(self.grid.n_cells, dtype=np.int64)
        grow = sp.rho if params.mode == "exact" else 0
        self.units = [
            MemoryUnit(sp.delta_t, self.grid.cell_box(l, grow)) for l in range(self.grid.n_cells)
        ]

    def _targets(self, e: Event, cell: int):
        if self.params.mode != "exact":
            return (self.units[cell],)
        r, k = self.params.surface.rho, self.grid.cell_size
        cols = range(max((e.x - r) // k, 0), min((e.x + r) // k, self.grid.cols - 1) + 1)
        rows = range(max((e.y - r) // k, 0), min((e.y + r) // k, self.grid.rows - 1) + 1)
        return [self.units[cy * self.grid.cols + cx] for cy in rows for cx in cols]

    def push(self, e: Event) -> None:
        e = Event(*e)
        sp = self.params.surface
        cell = self.grid.get_cell(e.x, e.y)
        unit = self.units[cell]
        self.hist[cell] += local_memory_surface(e, unit.neighbors(e, sp.rho), sp)
        for u in self._targets(e, cell):
            update_memory(u, e)
        self.count[cell] += 1

    def feed(self, events: Iterable) -> "HatsAccumulator":
        for e in events:
            self.push(e)
        return self

    def averaged(self) -> np.ndarray:
        """Per-cell histograms divided by their event counts (empty cells stay 0)."""
        out = np.zeros_like(self.hist)
        nz = self.count > 0
        out[nz] = self.hist[nz] / self.count[nz, None, None, None]
        return out


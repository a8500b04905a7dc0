"""Per-event time surfaces.

A surface is a float64 array of shape ``(2*rho+1, 2*rho+1, 2)`` indexed by
``(z_y + rho, z_x + rho, q)`` where ``q`` is 0 for OFF and 1 for ON events.
Only the channel matching the polarity of the event is ever non-zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .events import Event, EventStream, SensorGeometry

NEVER = -1


def pol_index(p: int) -> int:
    return 1 if p > 0 else 0


@dataclass(frozen=True)
class SurfaceParams:
    rho: int = 3
    tau: float = 1e9
    delta_t: float = 100_000

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.delta_t > 0:
            raise ValueError(f"delta_t must be > 0, got {self.delta_t}")

    @property
    def side(self) -> int:
        return 2 * self.rho + 1

    @property
    def shape(self) -> tuple:
        return (self.side, self.side, 2)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.float64)


class PixelLastTime:
    """Timestamp of the latest event per pixel and polarity (``-1`` = never)."""

    def __init__(self, geometry: SensorGeometry):
        self.geometry = geometry
        self.last = np.full((geometry.height, geometry.width, 2), NEVER, dtype=np.int64)

    def update(self, e: Event) -> None:
        self.last[e.y, e.x, pol_index(e.p)] = e.t


def last_event_surface(e: Event, state: PixelLastTime, params: SurfaceParams) -> np.ndarray:
    """Surface built from the most recent event of each neighbouring pixel.

    Pixels that never fired, or lie off the sensor, contribute 0. ``state``
    must not yet include ``e`` itself.
    """
    r = params.rho
    out = params.zeros()
    g = state.geometry
    x0, x1 = max(e.x - r, 0), min(e.x + r + 1, g.width)
    y0, y1 = max(e.y - r, 0), min(e.y + r + 1, g.height)
    q = pol_index(e.p)
    patch = state.last[y0:y1, x0:x1, q]
    seen = patch != NEVER
    vals = np.where(seen, np.exp(-(e.t - patch) / params.tau), 0.0)
    out[y0 - e.y + r:y1 - e.y + r, x0 - e.x + r:x1 - e.x + r, q] = vals
    return out


def local_memory_surface(e: Event, memory: Iterable, params: SurfaceParams) -> np.ndarray:
    """Sum of decayed contributions of every remembered event near ``e``.

    ``memory`` yields ``(x, y, t, p)`` records; it may hold more than the
    neighbourhood, since membership (same polarity, within ``rho``, and
    ``t - delta_t <= t_j < t``) is checked here.
    """
    r = params.rho
    out = params.zeros()
    q = pol_index(e.p)
    lo = e.t - params.delta_t
    for xj, yj, tj, pj in memory:
        if pj != e.p or not (lo <= tj < e.t):
            continue
        dx, dy = xj - e.x, yj - e.y
        if -r <= dx <= r and -r <= dy <= r:
            out[dy + r, dx + r, q] += np.exp(-(e.t - tj) / params.tau)
    return out


def brute_force_surface(e: Event, stream: EventStream, index: int, params: SurfaceParams,
                        restrict=None) -> np.ndarray:
    """Reference local-memory surface by exhaustive scan of ``stream[:index]``.

    ``restrict`` optionally narrows the candidates with a boolean mask over
    the whole stream (used for the cell-restricted variant).
    """
    r = params.rho
    out = params.zeros()
    x, y, t, p = stream.x[:index], stream.y[:index], stream.t[:index], stream.p[:index]
    dx = x - e.x
    dy = y - e.y
    age = e.t - t
    member = (
        (p == e.p)
        & (np.abs(dx) <= r) & (np.abs(dy) <= r)
        & (t >= e.t - params.delta_t) & (t < e.t)
    )
    if restrict is not None:
        member &= restrict[:index]
    if member.any():
        w = np.exp(-age[member] / params.tau)
        np.add.at(out[:, :, pol_index(e.p)], (dy[member] + r, dx[member] + r), w)
    return out


def surfaces(stream: EventStream, params: SurfaceParams, kind: str = "memory",
             engine: str = "compiled") -> np.ndarray:
    """Surface of every event of ``stream``, stacked along a leading axis.

    ``kind`` is ``"memory"`` (local memory) or ``"last"`` (last event);
    ``engine="reference"`` uses the per-event Python definitions above.
    """
    if kind not in ("memory", "last"):
        raise ValueError(f"unknown surface kind {kind!r}")
    g = stream.geometry
    if engine == "compiled":
        from ._kernel import last_surfaces_kernel, memory_surfaces_kernel

        args = (stream.x, stream.y, stream.t, stream.p, g.width, g.height, params.rho, float(params.tau))
        if kind == "last":
            return last_surfaces_kernel(*args)
        return memory_surfaces_kernel(*args, float(params.delta_t))
    out = np.zeros((len(stream),) + params.shape)
    if kind == "last":
        state = PixelLastTime(g)
        for i, e in enumerate(stream):
            out[i] = last_event_surface(e, state, params)
            state.update(e)
    else:
        for i, e in enumerate(stream):
            out[i] = brute_force_surface(e, stream, i, params)
    return out

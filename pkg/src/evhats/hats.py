"""Histograms of Averaged Time Surfaces.

The sensor is tiled into ``K x K`` cells (border cells may be smaller). Every
event's local memory surface is added to the histogram of its cell; each
histogram is then divided by the number of events the cell received, and the
per-cell histograms are concatenated cell-major with inner order
``(z_y, z_x, q)``, ``q`` being OFF then ON.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .events import EventStream, OutOfBoundsPixel, SensorGeometry, slice_window
from .memory import HatsAccumulator
from .surface import SurfaceParams, brute_force_surface

MODES = ("faithful", "exact")
BLOCK_EPS = 1e-12


@dataclass(frozen=True)
class BlockNorm:
    cells: int = 2
    order: float = 2.0

    def __post_init__(self):
        if self.cells < 1:
            raise ValueError("block side must be at least one cell")
        if not self.order > 0:
            raise ValueError("norm order must be positive")

    @classmethod
    def parse(cls, text: str) -> Optional["BlockNorm"]:
        """``off`` -> None, ``l2:3`` -> 3x3-cell blocks with the L2 norm."""
        text = text.strip().lower()
        if text in ("", "off", "none"):
            return None
        kind, _, cells = text.partition(":")
        if not kind.startswith("l") or not cells:
            raise ValueError(f"bad block norm {text!r}; expected off or l<p>:<cells>")
        return cls(int(cells), float(kind[1:]))

    def __str__(self):
        return f"l{self.order:g}:{self.cells}"


@dataclass(frozen=True)
class HatsParams:
    cell_size: int = 10
    surface: SurfaceParams = field(default_factory=SurfaceParams)
    mode: str = "faithful"
    block_norm: Optional[BlockNorm] = None

    def __post_init__(self):
        if self.cell_size < 1:
            raise ValueError(f"cell size must be >= 1, got {self.cell_size}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def make(cls, k=10, rho=3, tau=1e9, delta_t=100_000, mode="faithful", block_norm=None):
        return cls(k, SurfaceParams(rho, tau, delta_t), mode, block_norm)

    def fingerprint(self, windows: int = 1) -> str:
        sp = self.surface
        desc = (
            f"k={self.cell_size};rho={sp.rho};tau={float(sp.tau)!r};dt={float(sp.delta_t)!r};"
            f"mode={self.mode};block={self.block_norm or 'off'};windows={windows}"
        )
        return hashlib.sha1(desc.encode()).hexdigest()[:16]


class CellGrid:
    def __init__(self, geometry: SensorGeometry, cell_size: int):
        self.geometry = geometry
        self.cell_size = cell_size
        self.cols = -(-geometry.width // cell_size)
        self.rows = -(-geometry.height // cell_size)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def get_cell(self, x: int, y: int) -> int:
        if not self.geometry.contains(x, y):
            g = self.geometry
            raise OutOfBoundsPixel(-1, x, y, g.width, g.height)
        return (y // self.cell_size) * self.cols + x // self.cell_size

    def cell_box(self, cell: int, grow: int = 0):
        """Half-open pixel box ``(x0, y0, x1, y1)`` of a cell, dilated by ``grow``."""
        k = self.cell_size
        cy, cx = divmod(cell, self.cols)
        g = self.geometry
        return (
            max(cx * k - grow, 0),
            max(cy * k - grow, 0),
            min((cx + 1) * k + grow, g.width),
            min((cy + 1) * k + grow, g.height),
        )


def get_cell(x: int, y: int, grid: CellGrid) -> int:
    return grid.get_cell(x, y)


def descriptor_size(geometry: SensorGeometry, params: HatsParams) -> int:
    grid = CellGrid(geometry, params.cell_size)
    return grid.n_cells * params.surface.side ** 2 * 2


@dataclass
class HatsDescriptor:
    values: np.ndarray
    grid: CellGrid
    params: HatsParams

    def __len__(self):
        return len(self.values)

    @property
    def fingerprint(self) -> str:
        return self.params.fingerprint()

    def cells(self) -> np.ndarray:
        """View of the values as ``(n_cells, side, side, 2)``."""
        return self.values.reshape((self.grid.n_cells,) + self.params.surface.shape)


def _normalize(hist: np.ndarray, count: np.ndarray) -> np.ndarray:
    out = np.zeros_like(hist)
    nz = count > 0
    out[nz] = hist[nz] / count[nz, None, None, None]
    return out


def _finish(averaged: np.ndarray, grid: CellGrid, params: HatsParams) -> HatsDescriptor:
    desc = HatsDescriptor(averaged.reshape(-1), grid, params)
    if params.block_norm is not None:
        desc = block_normalize(desc, grid, params.block_norm.cells, params.block_norm.order)
    return desc


def compute_hats(stream, params: HatsParams, engine: str = "compiled") -> HatsDescriptor:
    """HATS descriptor of a whole stream in a single forward pass.

    ``engine="compiled"`` runs the array kernel; ``engine="stream"`` runs the
    object-level accumulator, which also accepts a ``(geometry, iterable)``
    pair so the events can come from a one-shot iterator.
    """
    if engine == "stream":
        if isinstance(stream, EventStream):
            geometry, events = stream.geometry, stream
        else:
            geometry, events = stream
        acc = HatsAccumulator(geometry, params).feed(events)
        return _finish(acc.averaged(), acc.grid, params)
    if engine != "compiled":
        raise ValueError(f"unknown engine {engine!r}")

    from ._kernel import hats_kernel

    g = stream.geometry
    sp = params.surface
    grid = CellGrid(g, params.cell_size)
    hist, count = hats_kernel(
        stream.x, stream.y, stream.t, stream.p, g.width, g.height,
        params.cell_size, sp.rho, float(sp.tau), float(sp.delta_t), params.mode == "exact",
    )
    return _finish(_normalize(hist, count), grid, params)


def hats_oracle(stream: EventStream, params: HatsParams) -> HatsDescriptor:
    """Reference descriptor: every surface by exhaustive scan of the past stream.

    In faithful mode the scan only admits events from the event's own cell.
    Quadratic in the number of events; meant for streams up to ~1e4 events.
    """
    grid = CellGrid(stream.geometry, params.cell_size)
    sp = params.surface
    hist = np.zeros((grid.n_cells,) + sp.shape)
    count = np.zeros(grid.n_cells, dtype=np.int64)
    k = params.cell_size
    cell_ids = (stream.y // k) * grid.cols + stream.x // k
    for i, e in enumerate(stream):
        cell = int(cell_ids[i])
        restrict = cell_ids == cell if params.mode == "faithful" else None
        hist[cell] += brute_force_surface(e, stream, i, sp, restrict=restrict)
        count[cell] += 1
    return _finish(_normalize(hist, count), grid, params)


def block_normalize(desc: HatsDescriptor, grid: CellGrid, block: int, order: float = 2.0) -> HatsDescriptor:
    """Divide each non-overlapping ``block x block`` group of cells by its norm.

    Blocks tile the cell grid from the top-left; those on the right and bottom
    edges may be smaller. All-zero blocks are left untouched.
    """
    if block < 1:
        raise ValueError("block must be >= 1")
    cells = desc.values.reshape(grid.rows, grid.cols, -1).copy()
    for by in range(0, grid.rows, block):
        for bx in range(0, grid.cols, block):
            sub = cells[by:by + block, bx:bx + block]
            norm = np.sum(np.abs(sub) ** order) ** (1.0 / order)
            if norm > 0:
                sub /= norm + BLOCK_EPS
    return HatsDescriptor(cells.reshape(-1), grid, desc.params)


def stack_windows(stream: EventStream, params: HatsParams, window_count: int = 1,
                  engine: str = "compiled") -> np.ndarray:
    """Concatenate descriptors of ``window_count`` consecutive ``delta_t`` windows.

    Windows start at the first event's timestamp; each is computed from
    scratch and windows past the end of the stream contribute zeros.
    """
    if window_count < 1:
        raise ValueError("window_count must be >= 1")
    dim = descriptor_size(stream.geometry, params)
    out = np.zeros(dim * window_count)
    if len(stream) == 0:
        return out
    t0 = int(stream.t[0])
    dt = params.surface.delta_t
    for w in range(window_count):
        part = slice_window(stream, t0 + w * dt, t0 + (w + 1) * dt)
        if len(part):
            out[w * dim:(w + 1) * dim] = compute_hats(part, params, engine=engine).values
    return out


__all__ = [
    "BlockNorm", "HatsParams", "CellGrid", "HatsDescriptor", "MODES",
    "get_cell", "descriptor_size", "compute_hats", "hats_oracle", "block_normalize",
    "stack_windows",
]

"""Event-camera features built from histograms of averaged time surfaces."""

from .events import (
    Event, EventError, EventStream, InvalidPolarity, InvalidTimestamp, NonMonotonicTimestamps,
    OutOfBoundsPixel, SensorGeometry, slice_window, transform, validate_stream,
)
from .formats import MalformedHeader, TruncatedRecord, read_events, write_events
from .hats import (
    BlockNorm, CellGrid, HatsDescriptor, HatsParams, block_normalize, compute_hats,
    descriptor_size, get_cell, hats_oracle, stack_windows,
)
from .surface import SurfaceParams, brute_force_surface, last_event_surface, local_memory_surface

__version__ = "0.1.0"

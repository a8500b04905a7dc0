"""Synthetic event streams: moving bars and uniform Poisson noise.

A scene is a bar of ``bar_width`` pixels sliding across the sensor at
constant velocity. Pixel centres sit at integer coordinates; a pixel emits
an ON event when the leading edge crosses its centre and an OFF event when
the trailing edge does. Every random draw goes through :mod:`evhats.rng`, so
a spec and seed always give the same stream.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .events import EventStream, SensorGeometry, concatenate
from .rng import SplitMix64, derive_seed

PATTERNS = ("vertical-edge", "horizontal-edge", "diagonal-edge")
US = 1_000_000


@dataclass(frozen=True)
class SceneSpec:
    geometry: SensorGeometry
    pattern: str = "vertical-edge"
    velocity: float = 500.0          # px/s along the edge normal, signed
    duration: int = 100_000          # us
    events_per_crossing: int = 1
    bar_width: float = 6.0           # px
    offset: float = 0.0              # leading-edge position at t=0, px
    jitter: int = 500                # us spread of extra events per crossing
    seed: int = 0

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.velocity == 0:
            raise ValueError("velocity must be non-zero")
        if self.events_per_crossing < 1:
            raise ValueError("events_per_crossing must be >= 1")


@dataclass(frozen=True)
class NoiseSpec:
    rate: float = 0.0                # events/s over the whole array
    seed: int = 0

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("noise rate must be >= 0")


def _edge_coordinate(pattern: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if pattern == "vertical-edge":
        return x.astype(np.float64)
    if pattern == "horizontal-edge":
        return y.astype(np.float64)
    return (x + y) / np.sqrt(2.0)


def generate_scene(spec: SceneSpec, label=None) -> EventStream:
    g = spec.geometry
    yy, xx = np.mgrid[0:g.height, 0:g.width]
    xx, yy = xx.ravel(), yy.ravel()
    u = _edge_coordinate(spec.pattern, xx, yy)
    v = spec.velocity
    trail = spec.offset - spec.bar_width * np.sign(v)

    xs, ys, ts, ps = [], [], [], []
    for front, pol in ((spec.offset, 1), (trail, -1)):
        tc = np.round((u - front) / v * US)
        hit = (tc >= 0) & (tc < spec.duration)
        xs.append(xx[hit]); ys.append(yy[hit]); ts.append(tc[hit].astype(np.int64))
        ps.append(np.full(hit.sum(), pol, dtype=np.int64))
    x, y, t, p = (np.concatenate(a) for a in (xs, ys, ts, ps))

    extra = spec.events_per_crossing - 1
    if extra and len(t):
        rng = SplitMix64(spec.seed)
        dt = 1 + np.floor(rng.random(len(t) * extra) * spec.jitter).astype(np.int64)
        x = np.concatenate([x, np.repeat(x, extra)])
        y = np.concatenate([y, np.repeat(y, extra)])
        p = np.concatenate([p, np.repeat(p, extra)])
        t = np.concatenate([t, np.repeat(t, extra) + dt])
        keep = t < spec.duration
        x, y, t, p = x[keep], y[keep], t[keep], p[keep]

    order = np.lexsort((p, x, y, t))
    return EventStream.from_arrays(g, x[order], y[order], t[order], p[order], label)


def inject_noise(stream: EventStream, noise: NoiseSpec, return_mask: bool = False):
    """Merge uniform Poisson noise over ``[t_first, t_last]`` into ``stream``.

    Noise pixels and polarities are uniform. On timestamp ties the original
    events come first, so their relative order never changes. With
    ``return_mask`` a boolean array marking the original events is also returned.
    """
    if noise.rate == 0 or len(stream) < 2:
        return (stream, np.ones(len(stream), bool)) if return_mask else stream
    t0, t1 = int(stream.t[0]), int(stream.t[-1])
    rng = SplitMix64(noise.seed)
    mean_gap = US / noise.rate
    arrivals = []
    now = float(t0)
    while True:
        # draw in batches sized to the expected count
        batch = max(16, int((t1 - now) / mean_gap * 1.2) + 16)
        gaps = -np.log1p(-rng.random(batch)) * mean_gap
        times = now + np.cumsum(gaps)
        inside = times <= t1
        arrivals.append(times[inside])
        if not inside.all():
            break
        now = float(times[-1])
    t = np.floor(np.concatenate(arrivals)).astype(np.int64)
    n = len(t)
    g = stream.geometry
    noisy = EventStream.from_arrays(
        g, rng.integers(0, g.width, n), rng.integers(0, g.height, n), t, rng.choice_sign(n)
    )
    merged = concatenate([stream, noisy], g, label=stream.label)
    if not return_mask:
        return merged
    source = np.r_[np.ones(len(stream), bool), np.zeros(n, bool)]
    return merged, source[np.argsort(np.r_[stream.t, t], kind="stable")]


def random_scene(pattern: str, geometry: SensorGeometry, seed: int, duration: int = 100_000,
                 speed=(300.0, 800.0), max_entry: int = 30_000, **kw) -> SceneSpec:
    """Bar with random speed, direction and entry delay (up to ``max_entry`` us)."""
    rng = SplitMix64(seed)
    speed_v = rng.uniform(*speed)
    sign = 1.0 if rng.random(1)[0] < 0.5 else -1.0
    entry = rng.uniform(0.0, max_entry) / US
    if pattern == "vertical-edge":
        extent = geometry.width - 1
    elif pattern == "horizontal-edge":
        extent = geometry.height - 1
    else:
        extent = (geometry.width + geometry.height - 2) / np.sqrt(2.0)
    # leading edge reaches the first pixel it meets after `entry` seconds
    offset = -speed_v * entry if sign > 0 else extent + speed_v * entry
    return SceneSpec(geometry, pattern, sign * speed_v, duration, offset=offset,
                     seed=derive_seed(seed, 1), **kw)


def two_class_dataset(n_per_class: int, geometry: SensorGeometry = SensorGeometry(32, 32),
                      noise: NoiseSpec = NoiseSpec(5000.0), seed: int = 0,
                      duration: int = 100_000, **scene_kw) -> list[EventStream]:
    """Labelled streams: class 0 horizontal bars, class 1 vertical bars.

    Samples alternate between the classes; each gets its own speed, direction,
    entry time and noise seed derived from ``seed``.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    out = []
    for i in range(n_per_class):
        for label, pattern in ((0, "horizontal-edge"), (1, "vertical-edge")):
            s = derive_seed(seed, i, label)
            scene = generate_scene(random_scene(pattern, geometry, s, duration, **scene_kw), label)
            out.append(inject_noise(scene, replace(noise, seed=derive_seed(s, 7))))
    return out

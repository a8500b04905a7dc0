"""Noise sensitivity of last-event versus local-memory time surfaces.

A trial renders a moving bar, adds Poisson noise at a fixed fraction of the
signal event rate, and compares, for every signal event, the surface seen in
the noisy stream with the one seen in the clean stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import SensorGeometry
from .rng import derive_seed
from .surface import SurfaceParams, surfaces
from .synth import PATTERNS, NoiseSpec, generate_scene, inject_noise, random_scene


@dataclass
class TrialResult:
    seed: int
    pattern: str
    n_signal: int
    n_noise: int
    absolute: dict   # kind -> mean L2 distance per signal event
    relative: dict   # kind -> sum of L2 distances / sum of clean-surface norms

    @property
    def memory_wins(self) -> bool:
        return self.relative["memory"] < self.relative["last"]


def noise_trial(seed: int, geometry: SensorGeometry = SensorGeometry(32, 32),
                params: SurfaceParams = SurfaceParams(3, 1e9, 100_000),
                noise_fraction: float = 0.2, events_per_crossing: int = 3) -> TrialResult:
    pattern = PATTERNS[seed % len(PATTERNS)]
    spec = random_scene(pattern, geometry, derive_seed(seed, 0), events_per_crossing=events_per_crossing)
    clean = generate_scene(spec)
    span = max(clean.duration, 1) / 1e6
    rate = noise_fraction * len(clean) / span
    noisy, signal = inject_noise(clean, NoiseSpec(rate, derive_seed(seed, 1)), return_mask=True)
    absolute, relative = {}, {}
    for kind in ("memory", "last"):
        ref = surfaces(clean, params, kind).reshape(len(clean), -1)
        got = surfaces(noisy, params, kind)[signal].reshape(len(clean), -1)
        dist = np.linalg.norm(got - ref, axis=1)
        absolute[kind] = float(dist.mean()) if len(dist) else 0.0
        norm = np.linalg.norm(ref, axis=1).sum()
        relative[kind] = float(dist.sum() / norm) if norm > 0 else 0.0
    return TrialResult(seed, pattern, len(clean), len(noisy) - len(clean), absolute, relative)


def robustness_study(trials: int = 100, **kw) -> list[TrialResult]:
    return [noise_trial(s, **kw) for s in range(trials)]

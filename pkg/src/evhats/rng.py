"""SplitMix64 as a counter-based generator.

Draw ``i`` of stream ``seed`` is ``mix(seed + (i + 1) * GAMMA)`` where, in
wrapping 64-bit arithmetic::

    GAMMA = 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Doubles in ``[0, 1)`` are ``(z >> 11) * 2**-53``. Being a pure function of
``(seed, i)``, any draw can be reproduced without replaying the stream.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for a labelled substream, e.g. ``derive_seed(seed, sample, 2)``."""
    s = int(seed) & _MASK
    for k in keys:
        s = int(mix64(np.uint64((s + (int(k) + 1) * int(GAMMA)) & _MASK)))
    return s


class SplitMix64:
    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self.counter = 0

    def next_u64(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + idx * GAMMA
        return mix64(z)

    def random(self, n: int) -> np.ndarray:
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def uniform(self, lo: float, hi: float, n: int | None = None):
        u = lo + (hi - lo) * self.random(1 if n is None else n)
        return float(u[0]) if n is None else u

    def integers(self, lo: int, hi: int, n: int) -> np.ndarray:
        """Integers in ``[lo, hi)``; the modulo bias is below 2**-40 for spans < 2**24."""
        return lo + (self.next_u64(n) % np.uint64(hi - lo)).astype(np.int64)

    def choice_sign(self, n: int) -> np.ndarray:
        return np.where(self.next_u64(n) >> np.uint64(63), 1, -1).astype(np.int64)

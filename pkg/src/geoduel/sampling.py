"""Seeded point sampler shared by scenarios and tests.

A 64-bit linear congruential generator is used instead of numpy's bit
generators so that any implementation can reproduce the sample points from
the documented recurrence:

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64
    u      = (state >> 11) / 2^53          (uniform in [0, 1))

The seed is the initial state.  Points are drawn coordinate by coordinate,
point by point: x = lo + (hi - lo) * u.
"""
from __future__ import annotations

import numpy as np

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
MASK = (1 << 64) - 1


class LCG64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK

    def next_u64(self) -> int:
        self.state = (MULTIPLIER * self.state + INCREMENT) & MASK
        return self.state

    def uniform(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()


def sample_box(count: int, seed: int, box) -> np.ndarray:
    """``count`` points uniform in ``box`` = [[lo_0, hi_0], ..., [lo_n-1, hi_n-1]]."""
    box = [(float(lo), float(hi)) for lo, hi in box]
    if count < 0:
        raise ValueError("count must be non-negative")
    for lo, hi in box:
        if not lo <= hi:
            raise ValueError(f"empty box interval [{lo}, {hi}]")
    rng = LCG64(seed)
    out = np.empty((count, len(box)))
    for p in range(count):
        for a, (lo, hi) in enumerate(box):
            out[p, a] = rng.uniform_in(lo, hi)
    return out

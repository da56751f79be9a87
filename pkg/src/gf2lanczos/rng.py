"""
Counter-based SplitMix64 generator.

Every random quantity in the package is derived from a single 64-bit seed so
that runs are reproducible bit for bit.  Word ``k`` of the stream for seed
``s`` is ``mix(s + (k + 1) * GOLDEN)`` where

    GOLDEN = 0x9E3779B97F4A7C15
    mix(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
             z = (z ^ (z >> 27)) * 0x94D049BB133111EB
             return z ^ (z >> 31)

all arithmetic modulo 2**64.  Sub-streams are obtained with
``derive_seed(seed, tag) = mix(seed ^ mix(tag * GOLDEN))``.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

# sub-stream tags
TAG_MATRIX = 1
TAG_START_BLOCK = 2
TAG_RHS_FILL = 3
TAG_TRIALS = 4
TAG_AUDIT = 5


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, tag: int) -> int:
    return mix64((seed & MASK64) ^ mix64((tag * GOLDEN) & MASK64))


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Stateful view over the counter-based stream for one seed."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def words(self, count: int) -> np.ndarray:
        """Next ``count`` 64-bit words as a uint64 array."""
        k = np.arange(self.counter + 1, self.counter + 1 + count, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + k * np.uint64(GOLDEN)
            return _mix_array(z)

    def next_word(self) -> int:
        return int(self.words(1)[0])

    def below(self, bounds: np.ndarray) -> np.ndarray:
        """One value uniform in ``[0, bound)`` per entry of ``bounds``.

        Uses the high 32 bits times the bound (multiply-shift); bounds must
        be below 2**32.
        """
        bounds = np.asarray(bounds, dtype=np.uint64)
        if bounds.size and int(bounds.max()) > 1 << 32:
            raise ValueError("bound too large for multiply-shift sampling")
        hi = self.words(bounds.size).reshape(bounds.shape) >> np.uint64(32)
        return (hi * bounds) >> np.uint64(32)

    def bits(self, count: int) -> np.ndarray:
        """``count`` uniform bits as a uint8 array of 0/1 values."""
        nwords = (count + 63) // 64
        raw = self.words(nwords).astype("<u8").view(np.uint8)
        return np.unpackbits(raw, bitorder="little")[:count]

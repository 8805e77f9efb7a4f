"""SplitMix64 stream.

Contract: the state starts at the 64-bit seed; draw ``i`` (0-based) is the
SplitMix64 finalizer applied to ``seed + (i + 1) * 0x9E3779B97F4A7C15``
modulo 2^64.  Uniform doubles use the top 53 bits.  Any implementation of
this contract produces the same stream and the same draw counts.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.seed = int(seed) % (1 << 64)
        self.count = 0

    def next_u64(self, size: int) -> np.ndarray:
        idx = np.arange(self.count + 1, self.count + size + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            out = _mix(np.uint64(self.seed) + idx * GOLDEN)
        self.count += size
        return out

    def uniform(self, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.next_u64(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def cauchy(self, size: int) -> np.ndarray:
        """Standard Cauchy variates (heavy tailed, symmetric)."""
        u = self.uniform(size)
        return np.tan(np.pi * (u - 0.5))

"""Counter-based deterministic random number generation.

Every sampler in this package draws from an explicitly seeded `Stream`.
A stream is a pure function of (key, counter): the i-th output is a
64-bit mix of `key + i * GOLDEN`, so identical seeds reproduce identical
draws on any platform and streams can be split without coordination.

Gaussian variates use the Marsaglia polar method on top of the uniform
stream; the only transcendental functions involved are sqrt and log.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_GOLDEN_U = np.uint64(GOLDEN)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)


def mix64(z: int) -> int:
    """Finalizing 64-bit mix (scalar)."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def derive(seed: int, *ids: int) -> int:
    """Derive a child seed from a parent seed and a path of stream ids.

    Distinct id paths give statistically independent streams; the same
    path always gives the same child.
    """
    s = mix64(seed)
    for t in ids:
        s = mix64(s ^ mix64((int(t) + 1) * GOLDEN))
    return s


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _MUL1
    z ^= z >> np.uint64(27)
    z *= _MUL2
    z ^= z >> np.uint64(31)
    return z


class Stream:
    """Sequential view of a counter-based stream keyed by a 64-bit seed."""

    def __init__(self, seed: int):
        self.key = seed & MASK64
        self.counter = 0

    def raw(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit words as a uint64 array."""
        idx = np.arange(1, count + 1, dtype=np.uint64) + np.uint64(self.counter & MASK64)
        self.counter += count
        return _mix_array(np.uint64(self.key) + idx * _GOLDEN_U)

    def uniform(self, count: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """i.i.d. uniforms on [low, high) as float64."""
        u = (self.raw(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def normal(self, count: int) -> np.ndarray:
        """i.i.d. standard normals via the Marsaglia polar method."""
        out = np.empty(count, dtype=np.float64)
        filled = 0
        while filled < count:
            # acceptance rate is pi/4; oversample to usually finish in one pass
            pairs = max(((count - filled) + 1) // 2, 8)
            pairs = int(pairs * 1.35) + 8
            v1 = self.uniform(pairs, -1.0, 1.0)
            v2 = self.uniform(pairs, -1.0, 1.0)
            s = v1 * v1 + v2 * v2
            keep = (s > 0.0) & (s < 1.0)
            v1, v2, s = v1[keep], v2[keep], s[keep]
            f = np.sqrt(-2.0 * np.log(s) / s)
            block = np.empty(2 * s.size, dtype=np.float64)
            block[0::2] = v1 * f
            block[1::2] = v2 * f
            take = min(block.size, count - filled)
            out[filled:filled + take] = block[:take]
            filled += take
        return out

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by multiply-shift."""
        u = int(self.raw(1)[0])
        return (u * n) >> 64

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        idx = np.arange(n)
        if n <= 1:
            return idx
        words = self.raw(n - 1)
        for t, i in enumerate(range(n - 1, 0, -1)):
            j = (int(words[t]) * (i + 1)) >> 64
            idx[i], idx[j] = idx[j], idx[i]
        return idx


def uniform_array(seed: int, count: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    """One-shot uniform draw on [low, high) from a fresh stream."""
    return Stream(seed).uniform(count, low, high)


def normal_array(seed: int, count: int) -> np.ndarray:
    """One-shot standard-normal draw from a fresh stream."""
    return Stream(seed).normal(count)

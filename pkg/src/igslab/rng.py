"""Deterministic counter-based 64-bit PRNG (splitmix-style).

Every randomized routine in the package draws from these helpers, so results
are reproducible bit-for-bit from one integer seed, independent of platform,
thread count and call interleaving.  The generator is counter based: sample i
of stream `seed` depends only on (seed, i), which is what makes sharding
across workers deterministic.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def splitmix64(seed: int, index: int) -> int:
    """The index-th 64-bit output of the stream identified by seed."""
    z = (int(seed) + _GOLDEN * (int(index) + 1)) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(seed: int, label: int) -> int:
    """Independent child seed for a shard or sub-experiment."""
    return splitmix64(seed, label)


def uniform_array(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """i.i.d. uniforms in [0, 1) from positions offset..offset+count-1."""
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = np.uint64(int(seed) & _MASK) + np.uint64(_GOLDEN) * idx
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return z.astype(np.float64) / 2.0**64


def integers(seed: int, count: int, high: int, offset: int = 0) -> np.ndarray:
    """i.i.d. integers in [0, high) drawn by inverse transform."""
    return np.minimum((uniform_array(seed, count, offset) * high).astype(np.int64), high - 1)

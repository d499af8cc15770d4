"""Deterministic randomness for the whole package.

Every random draw flows through Philox 4x64-10 (numpy's counter-based
implementation), keyed with ``(seed, stream_id)``.  A fixed (seed, stream)
pair yields identical draws on any platform and any worker count, which
keeps golden-file tests portable and parallel aggregation reproducible.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def bit_generator(seed: int, stream: int = 0) -> np.random.Philox:
    return np.random.Philox(key=[seed & _MASK64, stream & _MASK64])


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(bit_generator(seed, stream))


def draw_order(n: int, seed: int, stream: int = 0) -> tuple[int, ...]:
    """Uniformly random permutation of 0..n-1 from stream (seed, stream)."""
    return tuple(int(x) for x in generator(seed, stream).permutation(n))

"""Seeded random streams.

Every consumer of randomness asks for a stream keyed by integers (cell,
trial, purpose, ...) below a 64-bit master seed. Streams use the Philox
counter-based bit generator, so any trial can be regenerated in isolation
and in any order.
"""

from __future__ import annotations

import numpy as np

# purpose tags
TRUTH = 0
SAMPLE = 1
SOLVER = 2

_MASK64 = (1 << 64) - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *key: int) -> int:
    """A 64-bit seed derived from ``seed`` and ``key``, for APIs that take a plain seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def float_key(x: float) -> int:
    """Bit pattern of a float, usable as a stream key."""
    return int(np.float64(x).view(np.uint64))

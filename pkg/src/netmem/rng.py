"""Seeded random streams.

Every stochastic routine takes an integer master seed and derives its own
stream from ``(seed, *keys)`` through :class:`numpy.random.SeedSequence`,
feeding a counter-based Philox bit generator. Streams derived with different
keys are statistically independent, and a stream never depends on the order
in which other streams were drawn.
"""

from __future__ import annotations

import os

import numpy as np

SEED_ENV = "NETMEM_SEED"


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) & 0xFFFFFFFF for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def key(name: str) -> int:
    """Stable 32-bit key for a stream name (independent of PYTHONHASHSEED)."""
    h = 2166136261
    for ch in name.encode():
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h


def resolve_seed(seed: int | None, default: int = 0) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env)
    return default

"""Deterministic derivation of independent random streams.

Every randomized routine in the package derives its generator through
:func:`spawn_rng` from a user-supplied 64-bit seed plus an integer key
path (bootstrap replicate index, simulation replication index, ...).
Streams with distinct key paths are statistically independent, and the
derivation is independent of execution order, so parallel runs
reproduce serial results exactly.
"""

from __future__ import annotations

import numpy as np

__all__ = ["spawn_rng", "spawn_seed"]


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Return a generator for the stream identified by ``seed`` and ``key``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def spawn_seed(seed: int, *key: int) -> int:
    """Derive a child 64-bit seed (for nested components that take a seed)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])

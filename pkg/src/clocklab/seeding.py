"""Deterministic random-number streams.

All randomness in the package flows from one 64-bit seed. Child streams
are derived by spawn key (a tuple of counters), so per-trial generators
depend only on their logical index and never on execution order. This
keeps sampled outputs reproducible even if trials were evaluated in
parallel or out of order.
"""

from __future__ import annotations

import numpy as np


def rng_from(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the child stream identified by ``stream`` counters."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=stream))


def resolve_rng(seed_or_rng) -> np.random.Generator:
    """Accept either a seed or an existing Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return rng_from(int(seed_or_rng))

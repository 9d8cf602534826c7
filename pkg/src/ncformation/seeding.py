"""Deterministic random substreams keyed by integer tuples."""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *key)``.

    Streams with different keys are statistically independent, and the
    result does not depend on how many other streams were drawn before.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *(int(k) for k in key)]))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit seed derived from ``(seed, *key)``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *(int(k) for k in key)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])

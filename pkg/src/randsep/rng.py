"""Seeded random streams.

Every trial draws from a generator keyed by a tuple of integers such as
``(master_seed, cell_index, trial)``, so results do not depend on the order
(or process) in which trials are executed.
"""

from __future__ import annotations

import numpy as np


def make_rng(*key: int) -> np.random.Generator:
    if not key:
        raise ValueError("at least one seed component is required")
    if any(int(k) < 0 for k in key):
        raise ValueError(f"seed components must be non-negative, got {key}")
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)

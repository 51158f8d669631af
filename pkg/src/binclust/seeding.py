"""Deterministic stream splitting.

Every random draw in the package comes from a Philox (counter-based) generator
whose key is derived from a master seed plus a path of integers, e.g.
``(replicate, stage)`` or ``(K, restart)``. Derived streams do not depend on
execution order, so results are identical for any number of workers.
"""

from __future__ import annotations

import numpy as np


def derive_seed(master: int, *path: int) -> int:
    """64-bit seed for the stream at ``path`` under ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def generator(master: int, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(derive_seed(master, *path)))

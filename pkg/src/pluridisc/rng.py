"""Seeded, splittable random streams (counter-based Philox)."""
from __future__ import annotations

import numpy as np


def generator(seed: int, *path: int) -> np.random.Generator:
    """Generator for the child stream ``path`` of ``seed``; independent of call order."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def restart_generators(seed: int, count: int, stream: int = 0) -> list[np.random.Generator]:
    return [generator(seed, stream, r) for r in range(count)]

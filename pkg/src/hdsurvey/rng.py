"""Seeded randomness.

Every random draw in the package goes through a ``numpy.random.Generator``
backed by PCG64 and built from an explicit integer seed; nothing reads the
global numpy state. PCG64 streams are identical across platforms.
"""
import numpy as np

ALGORITHM = "PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(master_seed: int, *path: int) -> int:
    """Mix ``master_seed`` with an index path into an independent 64-bit seed.

    Uses ``SeedSequence(master_seed, spawn_key=path)``, whose hashing gives
    statistically independent children for distinct paths. The result depends
    only on its arguments, never on call order.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])

"""Deterministic per-purpose random streams.

Every consumer of randomness asks for a generator by ``(seed, stream)`` so that,
for example, changing how many draws the dynamics consume never perturbs the
graph that was sampled for the same seed.
"""

import numpy as np

GRAPH = 0
SEEDING = 1
DYNAMICS = 2
BASELINE = 3
ORACLE = 4


def make_rng(seed: int, stream: int, *extra: int) -> np.random.Generator:
    """Return a PCG64 generator for ``(seed, stream, *extra)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(int(stream), *map(int, extra)))
    return np.random.Generator(np.random.PCG64(ss))


def kernel_seed(rng: np.random.Generator) -> int:
    """Draw a 32-bit seed for the compiled kernels' internal generator."""
    return int(rng.integers(0, 2**32 - 1))

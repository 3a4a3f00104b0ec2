"""Seeded random streams.

Every random draw in the package goes through :func:`make_rng`.  A seed is
any integer (reduced modulo 2**64) and a stream name selects an independent
PCG64 substream, so an instance generator and a solver run that share a seed
never share random numbers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

STREAMS = {
    "instance": 1,
    "solver": 2,
}


def make_rng(seed: int, stream: str) -> np.random.Generator:
    """Return the generator for ``(seed, stream)``; equal arguments give equal draws."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(STREAMS[stream],))
    return np.random.Generator(np.random.PCG64(ss))

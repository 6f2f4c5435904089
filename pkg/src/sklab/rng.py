"""Seeded counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, stream_index)``, so the
draws for replica ``k`` of a run do not depend on how replicas are split
across workers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed, index=0):
    """Generator for replica ``index`` under master ``seed`` (both 64-bit)."""
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def as_generator(rng_seed):
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return stream(rng_seed, 0)


def open_uniform(rng, size):
    """Uniform draws on the open interval (0, 1)."""
    u = rng.random(size)
    # rng.random is on [0, 1); u = 0 would give a Frechet draw of exactly 0
    zero = u == 0.0
    if zero.any():
        u[zero] = 2.0**-54
    return u

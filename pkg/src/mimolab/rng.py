"""Seeded random streams.

Every stochastic routine takes a ``numpy.random.Generator``.  Parallel code
derives one independent generator per (master seed, stream index) so that a
given stream produces the same numbers whether it runs serially or on any
worker.
"""

from __future__ import annotations

import numpy as np

# Trials are grouped in fixed-size blocks; a block is the unit of parallel work.
BLOCK_SIZE = 256


def stream(seed: int, *index: int) -> np.random.Generator:
    """Generator for stream ``index`` of master ``seed`` (counter-based Philox)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples: each of real/imag part has variance 1/2."""
    z = rng.standard_normal(size=(*np.atleast_1d(shape), 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def blocks(trials: int, size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split ``trials`` into (block index, count) pairs of a fixed layout."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_full, rest = divmod(trials, size)
    out = [(b, size) for b in range(n_full)]
    if rest:
        out.append((n_full, rest))
    return out


def derive_seed(seed: int, *index: int) -> int:
    """Independent 63-bit seed for sub-experiment ``index`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))

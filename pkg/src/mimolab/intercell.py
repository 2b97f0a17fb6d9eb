"""Monte-Carlo estimate of the intercell interference factor beta.

User 1 sits uniformly in the home cell, user 2 uniformly in one of the six
nearest co-channel cells (chosen uniformly).  Both large-scale gains are
measured towards the home base station; beta is the mean of their ratio.

With reuse 1 the co-channel cells are the edge-sharing neighbours at
distance sqrt(3) R; with reuse 3 they are the second-ring cells at 3 R.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channel import CellGeometry, path_gain, place_users, shadowing
from .errors import ConfigError
from .rng import blocks, stream

BLOCK = 1 << 16


def cochannel_centers(radius: float, reuse_factor: int) -> np.ndarray:
    """Centers (6, 2) of the nearest co-channel cells for a flat-topped tiling."""
    if reuse_factor == 1:
        d, offset = np.sqrt(3.0) * radius, np.pi / 6
    elif reuse_factor == 3:
        d, offset = 3.0 * radius, 0.0
    else:
        raise ConfigError(f"unsupported reuse factor {reuse_factor} (use 1 or 3)")
    ang = offset + np.pi / 3 * np.arange(6)
    return d * np.column_stack([np.cos(ang), np.sin(ang)])


def _block_sum(geometry: CellGeometry, centers, seed, index, count) -> float:
    rng = stream(seed, index)
    p1 = place_users(geometry, count, rng)
    p2 = place_users(geometry, count, rng) + centers[rng.integers(0, 6, count)]
    z1 = shadowing(geometry.shadow_sigma_db, count, rng)
    z2 = shadowing(geometry.shadow_sigma_db, count, rng)
    b1 = path_gain(np.hypot(*p1.T), z1, geometry.r_h_m, geometry.nu)
    b2 = path_gain(np.hypot(*p2.T), z2, geometry.r_h_m, geometry.nu)
    return float(np.sum(b2 / b1))


def estimate_intercell_beta(geometry: CellGeometry | None = None, nu: float | None = None,
                            shadow_sigma_db: float | None = None, reuse_factor: int = 1,
                            samples: int = 1_000_000, seed: int = 0, workers: int = 1) -> float:
    geometry = geometry or CellGeometry()
    geometry = CellGeometry(
        radius_m=geometry.radius_m,
        r_h_m=geometry.r_h_m,
        shadow_sigma_db=geometry.shadow_sigma_db if shadow_sigma_db is None else shadow_sigma_db,
        nu=geometry.nu if nu is None else nu,
    )
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    centers = cochannel_centers(geometry.radius_m, int(reuse_factor))
    layout = blocks(samples, BLOCK)

    def job(block):
        return _block_sum(geometry, centers, seed, *block)

    if workers > 1 and len(layout) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            sums = list(ex.map(job, layout))
    else:
        sums = [job(b) for b in layout]
    return float(sum(sums) / samples)

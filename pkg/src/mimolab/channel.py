"""Large-scale profiles, Rayleigh fast fading and composite channel matrices.

Cells are flat-topped hexagons (vertices at 0, 60, ..., 300 degrees) with the
base station at the center.  Large-scale gains follow
``beta = z / (r / r_h) ** nu`` with log-normal shadowing ``z`` given in dB.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .rng import complex_normal

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class CellGeometry:
    radius_m: float = 1000.0
    r_h_m: float = 100.0
    shadow_sigma_db: float = 8.0
    nu: float = 3.8

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigError(f"path-loss exponent must be positive, got {self.nu}")
        if not 0 < self.r_h_m < self.radius_m:
            raise ConfigError(
                f"need 0 < r_h < radius, got r_h={self.r_h_m}, radius={self.radius_m}"
            )
        if self.shadow_sigma_db < 0:
            raise ConfigError("shadow_sigma_db must be >= 0")


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters.  ``pp = tau * pu`` is derived, never stored."""

    M: int = 100
    K: int = 10
    tau: int = 10
    T: int = 196
    pu: float = 10.0
    L: int = 1
    beta_inter: float = 0.0
    geometry: CellGeometry = field(default_factory=CellGeometry)

    def __post_init__(self):
        for name in ("M", "K", "T", "L"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.K <= self.tau <= self.T:
            raise ConfigError(f"need K <= tau <= T, got K={self.K}, tau={self.tau}, T={self.T}")
        if not self.pu > 0:
            raise ConfigError(f"pu must be positive, got {self.pu}")
        if not 0.0 <= self.beta_inter <= 1.0:
            raise ConfigError("beta_inter must lie in [0, 1]")

    @property
    def pp(self) -> float:
        return self.tau * self.pu


@dataclass(frozen=True)
class LargeScaleProfile:
    betas: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float).reshape(-1)
        if b.size == 0 or not np.all(np.isfinite(b)) or np.any(b <= 0):
            raise ConfigError("large-scale gains must be positive and finite")
        b.setflags(write=False)
        object.__setattr__(self, "betas", b)

    @classmethod
    def uniform(cls, K: int, value: float = 1.0) -> "LargeScaleProfile":
        return cls(np.full(K, float(value)))

    @property
    def K(self) -> int:
        return self.betas.size

    def __len__(self):
        return self.betas.size


@dataclass(frozen=True)
class ChannelSet:
    H: np.ndarray
    D: LargeScaleProfile
    G: np.ndarray


def in_hexagon(x, y, radius: float) -> np.ndarray:
    """Membership test for a flat-topped hexagon centered at the origin."""
    ax, ay = np.abs(x), np.abs(y)
    return (ay <= SQRT3 / 2 * radius) & (SQRT3 * ax + ay <= SQRT3 * radius)


def place_users(geometry: CellGeometry, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform positions in the cell with distance >= r_h, shape (n, 2).

    Rejection from the bounding box; points closer than r_h are redrawn.
    """
    R = geometry.radius_m
    out = np.empty((0, 2))
    while out.shape[0] < n:
        m = max(2 * (n - out.shape[0]), 16)
        x = rng.uniform(-R, R, m)
        y = rng.uniform(-SQRT3 / 2 * R, SQRT3 / 2 * R, m)
        ok = in_hexagon(x, y, R) & (np.hypot(x, y) >= geometry.r_h_m)
        out = np.vstack([out, np.column_stack([x[ok], y[ok]])])
    return out[:n]


def shadowing(sigma_db: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return 10.0 ** (rng.normal(0.0, sigma_db, n) / 10.0)


def path_gain(r, z, r_h: float, nu: float):
    return z / (np.asarray(r, dtype=float) / r_h) ** nu


def draw_large_scale(geometry: CellGeometry, K: int, rng: np.random.Generator) -> LargeScaleProfile:
    if K < 1:
        raise ConfigError("K must be >= 1")
    pos = place_users(geometry, K, rng)
    z = shadowing(geometry.shadow_sigma_db, K, rng)
    r = np.hypot(pos[:, 0], pos[:, 1])
    return LargeScaleProfile(path_gain(r, z, geometry.r_h_m, geometry.nu))


def draw_fast_fading(M: int, K: int, rng: np.random.Generator) -> np.ndarray:
    if M < 1 or K < 1:
        raise DimensionError(f"need M, K >= 1, got M={M}, K={K}")
    return complex_normal(rng, (M, K))


def assemble_channel(H: np.ndarray, D: LargeScaleProfile) -> ChannelSet:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[1] != D.K:
        raise DimensionError(f"H has shape {H.shape} but profile has {D.K} users")
    G = H * np.sqrt(D.betas)
    return ChannelSet(H=H, D=D, G=G)


def favorable_propagation_bounds(H: np.ndarray, pu: float) -> tuple[float, float, float]:
    """Sum rate from the singular values of H and its rank-one / orthogonal bounds.

    The bounds use the actual energy ||H||_F^2 in place of the nominal M*K, so
    the sandwich holds exactly for every draw; they coincide with
    log2(1 + M K pu) and K log2(1 + M pu) when ||H||_F^2 = M K.
    """
    H = np.asarray(H)
    M, K = H.shape
    if M < K:
        raise DimensionError("favorable-propagation bounds need M >= K")
    sv = np.linalg.svd(H, compute_uv=False)
    sum_rate = float(np.sum(np.log2(1.0 + pu * sv**2)))
    energy = float(np.sum(np.abs(H) ** 2))
    if energy == 0:
        raise DimensionError("H must be nonzero")
    lower = float(np.log2(1.0 + pu * energy))
    upper = float(K * np.log2(1.0 + pu * energy / K))
    return lower, upper, sum_rate


@dataclass(frozen=True)
class MulticellChannels:
    """Channels seen by BS ``l``.

    ``G[i] = H[i] * sqrt(gains[i])`` links the K users of cell i to BS l;
    ``gains`` has shape (L, K) and may contain zeros for interfering cells.
    """

    l: int
    H: np.ndarray
    gains: np.ndarray
    G: np.ndarray

    @property
    def L(self) -> int:
        return self.gains.shape[0]


def simplified_gains(K: int, L: int, beta: float, l: int = 0) -> np.ndarray:
    """D_ll = I and D_li = beta I for i != l."""
    gains = np.full((L, K), float(beta))
    gains[l] = 1.0
    return gains


def assemble_multicell(H: np.ndarray, gains: np.ndarray, l: int = 0) -> MulticellChannels:
    H = np.asarray(H)
    gains = np.asarray(gains, dtype=float)
    if H.ndim != 3 or gains.shape != (H.shape[0], H.shape[2]):
        raise DimensionError(f"H has shape {H.shape}, gains {gains.shape}; expected (L, M, K) and (L, K)")
    if np.any(gains < 0) or np.any(gains[l] <= 0):
        raise ConfigError("gains must be >= 0 and the home-cell gains > 0")
    G = H * np.sqrt(gains)[:, None, :]
    return MulticellChannels(l=l, H=H, gains=gains, G=G)


def draw_multicell(M: int, gains: np.ndarray, rng: np.random.Generator, l: int = 0) -> MulticellChannels:
    L, K = np.shape(gains)
    return assemble_multicell(complex_normal(rng, (L, M, K)), gains, l)

"""Uplink pilot phase and MMSE channel estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LargeScaleProfile, MulticellChannels
from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class PilotMatrix:
    phi: np.ndarray

    @property
    def tau(self) -> int:
        return self.phi.shape[0]

    @property
    def K(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True)
class ChannelEstimate:
    """MMSE estimate ``g_hat`` with per-user error variances and shrinkage.

    ``d_tilde`` is the diagonal of (pp^-1 D^-1 + I)^-1, i.e. pp*b / (pp*b + 1);
    ``error_vars[i] = b_i / (pp*b_i + 1)``.
    """

    g_hat: np.ndarray
    error_vars: np.ndarray
    d_tilde: np.ndarray


def pilot_matrix(tau: int, K: int) -> PilotMatrix:
    """First K columns of the unitary tau-point DFT matrix."""
    if K < 1 or tau < K:
        raise ConfigError(f"need tau >= K >= 1, got tau={tau}, K={K}")
    n = np.arange(tau)
    F = np.exp(-2j * np.pi * np.outer(n, n) / tau) / np.sqrt(tau)
    return PilotMatrix(F[:, :K])


def shrinkage(pp: float, betas) -> tuple[np.ndarray, np.ndarray]:
    """Return (d_tilde, error_vars) for pilot power ``pp``."""
    b = np.asarray(betas, dtype=float)
    if not pp > 0:
        raise ConfigError(f"pilot power must be positive, got {pp}")
    if np.any(b <= 0):
        raise ConfigError("large-scale gains must be positive")
    # Same arithmetic as the multicell path with no contamination, so the two
    # agree bitwise at L = 1.
    s = b + 1.0 / pp
    return b / s, b * (1.0 / pp) / s


def simulate_pilot_observation(G: np.ndarray, phi: PilotMatrix, pp: float, N: np.ndarray) -> np.ndarray:
    """Received pilot block ``Y_p = sqrt(pp) G Phi^T + N`` (M x tau)."""
    G = np.asarray(G)
    if G.shape[1] != phi.K or N.shape != (G.shape[0], phi.tau):
        raise DimensionError(f"G {G.shape}, Phi {phi.phi.shape}, N {N.shape} are inconsistent")
    return np.sqrt(pp) * G @ phi.phi.T + N


def mmse_estimate(Y_p: np.ndarray, phi: PilotMatrix, pp: float, D: LargeScaleProfile) -> ChannelEstimate:
    if Y_p.shape[1] != phi.tau or phi.K != D.K:
        raise DimensionError(f"Y_p {Y_p.shape}, Phi {phi.phi.shape}, {D.K} users")
    d_tilde, error_vars = shrinkage(pp, D.betas)
    g_hat = (Y_p @ phi.phi.conj()) / np.sqrt(pp) * d_tilde
    return ChannelEstimate(g_hat, error_vars, d_tilde)


def mmse_estimate_equivalent(G: np.ndarray, W: np.ndarray, pp: float, D: LargeScaleProfile) -> ChannelEstimate:
    """Statistically equivalent form ``(G + W / sqrt(pp)) D~`` used in simulation.

    Works on a single (M, K) matrix or a (..., M, K) batch.
    """
    if G.shape != W.shape or G.shape[-1] != D.K:
        raise DimensionError(f"G {G.shape}, W {W.shape}, {D.K} users")
    d_tilde, error_vars = shrinkage(pp, D.betas)
    return ChannelEstimate((G + W / np.sqrt(pp)) * d_tilde, error_vars, d_tilde)


def multicell_mmse_estimate(channels: MulticellChannels, W: np.ndarray, pp: float) -> ChannelEstimate:
    """Pilot-contaminated estimate of the home-cell channel G_ll.

    All L cells reuse the same pilots, so the observation after despreading is
    ``sum_i G_li + W / sqrt(pp)``; the shrinkage is
    ``beta_llk / (sum_i beta_lik + 1/pp)``.  ``error_vars`` holds the
    per-user variance of the home-channel estimation error.
    """
    l = channels.l
    G_home = channels.G[l]
    if W.shape != G_home.shape:
        raise DimensionError(f"W {W.shape} vs G_ll {G_home.shape}")
    if not pp > 0:
        raise ConfigError(f"pilot power must be positive, got {pp}")
    gains = channels.gains
    b = gains[l]
    contamination = np.delete(gains, l, axis=0).sum(axis=0)
    s = gains.sum(axis=0) + 1.0 / pp
    d_tilde = b / s
    error_vars = b * (contamination + 1.0 / pp) / s
    observed = channels.G.sum(axis=0) + W / np.sqrt(pp)
    return ChannelEstimate(observed * d_tilde, error_vars, d_tilde)

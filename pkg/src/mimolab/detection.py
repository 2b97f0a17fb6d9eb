"""Linear detectors (MRC / ZF / MMSE) and per-user instantaneous SINR.

Data symbols and receiver noise are never sampled: the SINR of every user is
evaluated conditioned on the channel (or its estimate), so the ergodic rate is
the mean of ``log2(1 + SINR)`` over channel draws.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import LargeScaleProfile
from .errors import ConfigError, DimensionError, IllConditionedError

# Trials whose Gram matrix is worse conditioned than this are redrawn.
COND_LIMIT = 1e10


class DetectorKind(str, enum.Enum):
    MRC = "mrc"
    ZF = "zf"
    MMSE = "mmse"


class CsiMode(str, enum.Enum):
    PERFECT = "perfect"
    IMPERFECT = "imperfect"


@dataclass(frozen=True)
class SinrSample:
    values: np.ndarray
    csi_mode: CsiMode

    def rates(self) -> np.ndarray:
        return np.log2(1.0 + self.values)


def estimation_error_power(pu: float, tau: int, betas) -> float:
    """Total channel-estimation error power ``sum_i b_i / (tau pu b_i + 1)``."""
    b = np.asarray(betas, dtype=float)
    return float(np.sum(b / (tau * pu * b + 1.0)))


def detector_matrix(kind: DetectorKind, channel: np.ndarray, pu: float,
                    noise_scale: float | None = None) -> np.ndarray:
    """Detector matrix A (M x K) for ``channel``.

    ``noise_scale`` is the MMSE regularizer: 1/pu for perfect CSI, and
    ``sum_i b_i/(tau pu b_i + 1) + 1/pu`` when ``channel`` is an estimate.
    """
    kind = DetectorKind(kind)
    G = np.asarray(channel)
    if G.ndim != 2:
        raise DimensionError("channel must be an M x K matrix")
    if kind is DetectorKind.MRC:
        return G
    s = 1.0 / pu if noise_scale is None else noise_scale
    if not s > 0:
        raise ConfigError(f"noise_scale must be positive, got {s}")
    gram = G.conj().T @ G
    if kind is DetectorKind.ZF:
        M, K = G.shape
        if M < K or np.linalg.cond(gram) > COND_LIMIT:
            raise IllConditionedError("G^H G is singular or ill-conditioned")
        factor = cho_factor(gram, lower=True)
    else:
        factor = cho_factor(gram + s * np.eye(gram.shape[0]), lower=True)
    # A = G X with X = (Gram [+ s I])^-1; X is Hermitian so A^H = X G^H.
    return G @ cho_solve(factor, np.eye(gram.shape[0]))


def _interference_terms(A: np.ndarray, G: np.ndarray):
    C = A.conj().T @ G  # C[k, i] = a_k^H g_i
    signal = np.abs(np.diag(C)) ** 2
    interference = np.sum(np.abs(C) ** 2, axis=1) - signal
    norms = np.sum(np.abs(A) ** 2, axis=0)
    if np.any(norms == 0):
        raise DimensionError("detector has a zero column")
    return signal, np.maximum(interference, 0.0), norms


def sinr_perfect(A: np.ndarray, G: np.ndarray, pu: float) -> SinrSample:
    signal, interference, norms = _interference_terms(A, G)
    return SinrSample(pu * signal / (pu * interference + norms), CsiMode.PERFECT)


def sinr_imperfect(A_hat: np.ndarray, estimate, pu: float, tau: int, D: LargeScaleProfile) -> SinrSample:
    """SINR when the receiver treats the estimate as the true channel.

    The estimation-error power is summed over all K users, k included.
    """
    signal, interference, norms = _interference_terms(A_hat, estimate.g_hat)
    err = estimation_error_power(pu, tau, D.betas)
    return SinrSample(pu * signal / (pu * interference + pu * norms * err + norms), CsiMode.IMPERFECT)


def gram(X: np.ndarray) -> np.ndarray:
    """Batched ``X^H X`` over the trailing (M, K) axes."""
    return np.einsum("...mk,...mj->...kj", X.conj(), X)


def ill_conditioned(grams: np.ndarray) -> np.ndarray:
    """Boolean mask of batch entries whose Gram matrix exceeds COND_LIMIT."""
    return np.linalg.cond(grams) > COND_LIMIT


def _inverse_diagonal(mats: np.ndarray) -> np.ndarray:
    K = mats.shape[-1]
    eye = np.broadcast_to(np.eye(K), mats.shape)
    return np.real(np.diagonal(np.linalg.solve(mats, eye), axis1=-2, axis2=-1))


def batch_sinr(kind: DetectorKind, grams: np.ndarray, pu: float, error_power: float = 0.0) -> np.ndarray:
    """Per-user SINR for a batch of Gram matrices (..., K, K).

    Closed forms that equal :func:`sinr_perfect` / :func:`sinr_imperfect`
    with the corresponding detector; ``error_power = 0`` is perfect CSI.
    """
    kind = DetectorKind(kind)
    d = np.real(np.diagonal(grams, axis1=-2, axis2=-1))
    if kind is DetectorKind.MRC:
        total = np.sum(np.abs(grams) ** 2, axis=-1)
        interference = np.maximum(total - d**2, 0.0)
        return pu * d**2 / (pu * interference + pu * d * error_power + d)
    if kind is DetectorKind.ZF:
        return pu / ((pu * error_power + 1.0) * _inverse_diagonal(grams))
    omega = 1.0 / (error_power + 1.0 / pu)
    K = grams.shape[-1]
    return 1.0 / _inverse_diagonal(np.eye(K) + omega * grams) - 1.0

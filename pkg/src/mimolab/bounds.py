"""Closed-form lower bounds on the per-user uplink rate.

Six cases: {MRC, ZF, MMSE} x {perfect, imperfect CSI}.  The MMSE bounds use
a Gamma approximation of the post-detection SINR whose shape/scale come from
a two-equation fixed point in (mu, kappa).

All rates are in bits per channel use and exclude the (T - tau)/T training
overhead; :mod:`mimolab.tradeoff` applies it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detection import CsiMode, DetectorKind
from .errors import ConvergenceError, DimensionError, ValidityError
from .rng import blocks, complex_normal, stream


@dataclass(frozen=True)
class GammaParams:
    alpha: float
    theta: float
    mu: float
    kappa: float


@dataclass(frozen=True)
class BoundResult:
    rate: float
    detector: DetectorKind
    csi_mode: CsiMode
    valid: bool = True
    k: int = 0


def _check(K: int, betas, k: int) -> np.ndarray:
    b = np.asarray(betas, dtype=float).reshape(-1)
    if b.size != K:
        raise DimensionError(f"K={K} but {b.size} large-scale gains given")
    if not 0 <= k < K:
        raise DimensionError(f"user index {k} out of range for K={K}")
    return b


def _others(b: np.ndarray, k: int) -> float:
    # sum over i != k without the cancellation of b.sum() - b[k]
    return float(np.sum(np.delete(b, k)))


def mrc_bound_perfect(M: int, K: int, pu: float, betas, k: int) -> float:
    b = _check(K, betas, k)
    if M < 2:
        raise ValidityError("MRC bound needs M >= 2")
    return float(np.log2(1.0 + pu * (M - 1) * b[k] / (pu * _others(b, k) + 1.0)))


def zf_bound_perfect(M: int, K: int, pu: float, betas, k: int) -> float:
    b = _check(K, betas, k)
    if M < K + 1:
        raise ValidityError("ZF bound needs M >= K + 1")
    return float(np.log2(1.0 + pu * (M - K) * b[k]))


def _mu_map(mu: float, M: int, K: int, p: np.ndarray) -> float:
    c = (K - 1) / M
    return float(np.mean(1.0 / (M * p * (1.0 - c + c * mu) + 1.0)))


def _kappa(mu: float, M: int, K: int, p: np.ndarray) -> float:
    c = (K - 1) / M
    den2 = (M * p * (1.0 - c + c * mu) + 1.0) ** 2
    return float(np.sum((p * mu + 1.0) / den2) / (1.0 + np.sum(p / den2)))


def fixed_point_residuals(mu: float, kappa: float, M: int, K: int, products, k: int) -> tuple[float, float]:
    """Absolute residuals of the mu- and kappa-equations at (mu, kappa)."""
    p = np.delete(np.asarray(products, dtype=float), k)
    if p.size == 0:
        return abs(mu), abs(kappa)
    c = (K - 1) / M
    den = M * p * (1.0 - c + c * mu) + 1.0
    r_mu = mu - np.mean(1.0 / den)
    r_kappa = kappa * (1.0 + np.sum(p / den**2)) - np.sum((p * mu + 1.0) / den**2)
    return abs(float(r_mu)), abs(float(r_kappa))


def solve_fixed_point(M: int, K: int, products, k: int, *, damping: float = 0.5,
                      tol: float = 1e-12, max_iter: int = 10_000) -> tuple[float, float]:
    """Solve for (mu, kappa) given per-user effective SNR products.

    ``products[i]`` is pu*b_i for perfect CSI or omega*b_hat_i for imperfect
    CSI.  Damped Picard iteration on mu from 0.5, then kappa from its linear
    equation.  K = 1 gives (0, 0).
    """
    p_all = np.asarray(products, dtype=float).reshape(-1)
    if p_all.size != K:
        raise DimensionError(f"K={K} but {p_all.size} products given")
    if np.any(p_all <= 0):
        raise ValueError("effective SNR products must be positive")
    if K == 1:
        return 0.0, 0.0
    p = np.delete(p_all, k)
    mu = 0.5
    step = np.inf
    for _ in range(max_iter):
        new = (1.0 - damping) * mu + damping * _mu_map(mu, M, K, p)
        step = abs(new - mu)
        mu = new
        if step < tol:
            break
    else:
        raise ConvergenceError("mu iteration did not converge", abs(mu - _mu_map(mu, M, K, p)))
    return mu, _kappa(mu, M, K, p)


def gamma_params(M: int, K: int, products, k: int) -> GammaParams:
    mu, kappa = solve_fixed_point(M, K, products, k)
    a = M - K + 1 + (K - 1) * mu
    v = M - K + 1 + (K - 1) * kappa
    p_k = float(np.asarray(products, dtype=float)[k])
    return GammaParams(alpha=a * a / v, theta=v / a * p_k, mu=mu, kappa=kappa)


def _gamma_bound(M, K, products, k, csi) -> tuple[BoundResult, GammaParams]:
    if M < K:
        raise ValidityError("MMSE bound needs M >= K")
    g = gamma_params(M, K, products, k)
    if not g.alpha > 1:
        raise ValidityError(f"Gamma shape alpha={g.alpha:.4g} <= 1; bound undefined")
    rate = float(np.log2(1.0 + (g.alpha - 1.0) * g.theta))
    return BoundResult(rate, DetectorKind.MMSE, csi, True, k), g


def mmse_bound_perfect(M: int, K: int, pu: float, betas, k: int) -> tuple[BoundResult, GammaParams]:
    b = _check(K, betas, k)
    return _gamma_bound(M, K, pu * b, k, CsiMode.PERFECT)


def mrc_bound_imperfect(M: int, K: int, pu: float, tau: int, betas, k: int) -> float:
    b = _check(K, betas, k)
    if M < 2:
        raise ValidityError("MRC bound needs M >= 2")
    if tau < K:
        raise ValidityError("need tau >= K")
    bk = b[k]
    num = tau * pu**2 * (M - 1) * bk**2
    den = pu * (tau * pu * bk + 1.0) * _others(b, k) + (tau + 1) * pu * bk + 1.0
    return float(np.log2(1.0 + num / den))


def zf_bound_imperfect(M: int, K: int, pu: float, tau: int, betas, k: int) -> float:
    b = _check(K, betas, k)
    if M < K + 1:
        raise ValidityError("ZF bound needs M >= K + 1")
    if tau < K:
        raise ValidityError("need tau >= K")
    bk = b[k]
    num = tau * pu**2 * (M - K) * bk**2
    den = (tau * pu * bk + 1.0) * np.sum(pu * b / (tau * pu * b + 1.0)) + tau * pu * bk + 1.0
    return float(np.log2(1.0 + num / den))


def imperfect_mmse_products(pu: float, tau: int, betas) -> tuple[float, np.ndarray]:
    """Return (omega, b_hat) for the imperfect-CSI Gamma approximation."""
    b = np.asarray(betas, dtype=float)
    omega = 1.0 / (np.sum(b / (tau * pu * b + 1.0)) + 1.0 / pu)
    b_hat = tau * pu * b**2 / (tau * pu * b + 1.0)
    return float(omega), b_hat


def mmse_bound_imperfect(M: int, K: int, pu: float, tau: int, betas, k: int) -> tuple[BoundResult, GammaParams]:
    b = _check(K, betas, k)
    if tau < K:
        raise ValidityError("need tau >= K")
    omega, b_hat = imperfect_mmse_products(pu, tau, b)
    return _gamma_bound(M, K, omega * b_hat, k, CsiMode.IMPERFECT)


def bound(kind, csi, M: int, K: int, pu: float, betas, k: int, tau: int | None = None) -> BoundResult:
    """Dispatch to one of the six bounds; raises ValidityError when undefined."""
    kind, csi = DetectorKind(kind), CsiMode(csi)
    if csi is CsiMode.IMPERFECT and tau is None:
        raise ValueError("imperfect CSI needs tau")
    if kind is DetectorKind.MMSE:
        if csi is CsiMode.PERFECT:
            return mmse_bound_perfect(M, K, pu, betas, k)[0]
        return mmse_bound_imperfect(M, K, pu, tau, betas, k)[0]
    fn = {
        (DetectorKind.MRC, CsiMode.PERFECT): lambda: mrc_bound_perfect(M, K, pu, betas, k),
        (DetectorKind.ZF, CsiMode.PERFECT): lambda: zf_bound_perfect(M, K, pu, betas, k),
        (DetectorKind.MRC, CsiMode.IMPERFECT): lambda: mrc_bound_imperfect(M, K, pu, tau, betas, k),
        (DetectorKind.ZF, CsiMode.IMPERFECT): lambda: zf_bound_imperfect(M, K, pu, tau, betas, k),
    }[kind, csi]
    return BoundResult(fn(), kind, csi, True, k)


def user_bounds(kind, csi, M: int, pu: float, betas, tau: int | None = None, strict: bool = True) -> list[BoundResult]:
    """Bounds for every user; with ``strict=False`` invalid cases come back
    as ``BoundResult(nan, ..., valid=False)`` instead of raising."""
    b = np.asarray(betas, dtype=float).reshape(-1)
    out = []
    for k in range(b.size):
        try:
            out.append(bound(kind, csi, M, b.size, pu, b, k, tau))
        except ValidityError:
            if strict:
                raise
            out.append(BoundResult(float("nan"), DetectorKind(kind), CsiMode(csi), False, k))
    return out


def sum_bound(kind, csi, M: int, pu: float, betas, tau: int | None = None) -> float:
    return float(sum(r.rate for r in user_bounds(kind, csi, M, pu, betas, tau)))


def table1(M: int, pu: float, betas, tau: int) -> dict[tuple[DetectorKind, CsiMode], list[BoundResult]]:
    """All six per-user bounds at one operating point (invalid ones flagged)."""
    return {
        (kind, csi): user_bounds(kind, csi, M, pu, betas, tau, strict=False)
        for kind in DetectorKind for csi in CsiMode
    }


def asymptotic_limit(csi_mode, Eu: float, tau: int, beta_k: float) -> float:
    """Rate limit as M grows with pu = Eu/M (perfect) or Eu/sqrt(M) (imperfect)."""
    if CsiMode(csi_mode) is CsiMode.PERFECT:
        return float(np.log2(1.0 + beta_k * Eu))
    return float(np.log2(1.0 + tau * beta_k**2 * Eu**2))


def power_control_imperfect(Eu: float, M: int, tau: int, beta_k: float) -> float:
    return float(np.sqrt(Eu / (M * tau * beta_k)))


def wishart_trace_identity_check(m: int, n: int, trials: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo mean of tr((H^H H)^-1) for n x m CN(0,1) H against m/(n-m)."""
    if not n > m >= 1:
        raise ValueError(f"need n > m >= 1, got m={m}, n={n}")
    total = 0.0
    for index, count in blocks(trials):
        H = complex_normal(stream(seed, index), (count, n, m))
        W = np.einsum("bnk,bnj->bkj", H.conj(), H)
        total += float(np.sum(np.real(np.trace(np.linalg.inv(W), axis1=1, axis2=2))))
    return total / trials, m / (n - m)

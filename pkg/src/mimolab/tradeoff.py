"""Spectral- and energy-efficiency closed forms and the (pu, K, tau) optimizer.

All expressions assume unit large-scale fading (D = I) in the home cell and,
for the multicell model, ``beta * I`` towards the L - 1 interfering cells.
Spectral efficiency includes the (T - tau)/T pilot overhead; energy
efficiency is spectral efficiency divided by pu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from .detection import CsiMode, DetectorKind
from .errors import ConfigError, UnattainableError, ValidityError
from .rng import blocks, complex_normal, stream

LOG2E = float(np.log2(np.e))


@dataclass(frozen=True)
class TradeoffPoint:
    se: float
    ee: float
    pu: float
    K: int
    tau: int
    detector: DetectorKind


def lbar(L: int, beta: float) -> float:
    return (L - 1) * beta + 1.0


def _sinr(kind: DetectorKind, M, K, tau, pu, Lb, beta):
    # shared by the single- and multicell entry points so that L = 1 or
    # beta = 0 reproduces the single-cell value bit for bit
    if kind is DetectorKind.MRC:
        num = tau * (M - 1) * pu**2
        quad = tau * (K * Lb**2 - 1 + beta * (Lb - 1) * (M - 2))
    else:
        num = tau * (M - K) * pu**2
        quad = tau * K * (Lb**2 - Lb * beta + beta - 1)
    return num / (quad * pu**2 + Lb * (K + tau) * pu + 1)


def _se(kind, M, K, tau, pu, T, Lb, beta):
    return (T - tau) / T * K * np.log2(1 + _sinr(kind, M, K, tau, pu, Lb, beta))


def _validate(kind: DetectorKind, M: int, K: int, tau: int, T: int):
    if not 1 <= K <= tau <= T:
        raise ConfigError(f"need 1 <= K <= tau <= T, got K={K}, tau={tau}, T={T}")
    if kind is DetectorKind.MRC and M < 2:
        raise ValidityError("MRC needs M >= 2")
    if kind is DetectorKind.ZF and M < K + 1:
        raise ValidityError("ZF needs M >= K + 1")
    if kind is DetectorKind.MMSE:
        raise ValidityError("closed-form efficiency expressions exist for MRC and ZF only")


def se_multicell(kind, M: int, K: int, tau: int, pu: float, T: int, L: int = 1, beta_inter: float = 0.0) -> float:
    kind = DetectorKind(kind)
    _validate(kind, M, K, tau, T)
    if L < 1 or not 0.0 <= beta_inter <= 1.0:
        raise ConfigError("need L >= 1 and beta in [0, 1]")
    return float(_se(kind, M, K, tau, pu, T, lbar(L, beta_inter), beta_inter))


def se_single_cell(kind, M: int, K: int, tau: int, pu: float, T: int) -> float:
    return se_multicell(kind, M, K, tau, pu, T, 1, 0.0)


def ee_single_cell(kind, M: int, K: int, tau: int, pu: float, T: int) -> TradeoffPoint:
    se = se_single_cell(kind, M, K, tau, pu, T)
    return TradeoffPoint(se, se / pu, pu, K, tau, DetectorKind(kind))


def ee_multicell(kind, M: int, K: int, tau: int, pu: float, T: int, L: int, beta_inter: float) -> TradeoffPoint:
    se = se_multicell(kind, M, K, tau, pu, T, L, beta_inter)
    return TradeoffPoint(se, se / pu, pu, K, tau, DetectorKind(kind))


def low_power_laws(kind, M: int, K: int, tau: int, T: int, pu: float) -> tuple[float, float]:
    """Second-order small-pu spectral efficiency and the matching EE.

    Returns ``(se_approx, ee)`` with ``ee = sqrt(c * se_approx)`` where
    ``c = (T - tau)/T * K * log2(e) * tau * (M - 1)`` (``M - K`` for ZF).
    """
    kind = DetectorKind(kind)
    dof = (M - 1) if kind is DetectorKind.MRC else (M - K)
    c = (T - tau) / T * K * LOG2E * tau * dof
    se_approx = c * pu**2
    return se_approx, ee_from_se(kind, M, K, tau, T, se_approx)


def ee_from_se(kind, M: int, K: int, tau: int, T: int, se: float) -> float:
    """Low-power energy efficiency as a function of spectral efficiency."""
    kind = DetectorKind(kind)
    dof = (M - 1) if kind is DetectorKind.MRC else (M - K)
    return float(np.sqrt((T - tau) / T * K * LOG2E * tau * dof * se))


def multicell_asymptotic_sinr(csi_mode, Eu: float, tau: int, beta_llk: float, interferer_betas=()) -> float:
    """Large-M SINR: ``beta_llk Eu`` (perfect CSI, pu = Eu/M) or the
    pilot-contamination-limited value (imperfect CSI, pu = Eu/sqrt(M))."""
    if CsiMode(csi_mode) is CsiMode.PERFECT:
        return float(beta_llk * Eu)
    b = np.asarray(interferer_betas, dtype=float)
    return float(tau * beta_llk**2 * Eu**2 / (tau * np.sum(b**2) * Eu**2 + 1.0))


# ---------------------------------------------------------------------------
# reference mode: one single-antenna user, one single-antenna BS

def _exp_log(c):
    """E[log2(1 + c X)] for X ~ Exp(1), i.e. |z|^2 with z ~ CN(0, 1)."""
    c = np.asarray(c, dtype=float)
    x = 1.0 / c
    with np.errstate(over="ignore", invalid="ignore"):
        val = np.exp(x) * exp1(x)
    # asymptotic series once exp(x) overflows
    tail = (1.0 - 1.0 / x + 2.0 / x**2 - 6.0 / x**3) / x
    val = np.where(x > 600.0, tail, val)
    return LOG2E * val


def reference_se_exact(tau, pu, T):
    """Closed-form reference-mode spectral efficiency (exponential integral)."""
    tau = np.asarray(tau, dtype=float)
    c = tau * pu**2 / (1.0 + pu * (1.0 + tau))
    return (T - tau) / T * _exp_log(c)


@dataclass(frozen=True)
class ReferenceMode:
    se: float
    ee: float
    tau_opt: int
    pu: float
    T: int


def reference_mode(T: int = 196, pu: float = 10.0, trials: int = 1_000_000, seed: int = 0,
                   block: int = 1 << 16) -> ReferenceMode:
    """Monte-Carlo reference mode, maximized over the pilot length tau."""
    if T < 2 or not pu > 0:
        raise ConfigError("need T >= 2 and pu > 0")
    taus = np.arange(1, T, dtype=float)
    c = taus * pu**2 / (1.0 + pu * (1.0 + taus))
    sums = np.zeros(taus.size)
    for index, count in blocks(trials, block):
        z2 = np.abs(complex_normal(stream(seed, index), count)) ** 2
        sums += np.log2(1.0 + np.outer(c, z2)).sum(axis=1)
    se = (T - taus) / T * sums / trials
    j = int(np.argmax(se))
    return ReferenceMode(float(se[j]), float(se[j] / pu), int(taus[j]), pu, T)


# ---------------------------------------------------------------------------
# joint (pu, K, tau) optimizer

@dataclass(frozen=True)
class TradeoffGrid:
    """Search space; ``K_values`` / ``tau_values`` override the ranges (e.g. ``K_values=(1,)``)."""

    K_min: int = 1
    K_max: int | None = None  # None -> T - 1
    tau_max: int | None = None  # None -> T - 1
    pu_min: float = 1e-6
    pu_max: float = 1e6
    K_values: tuple[int, ...] | None = None
    tau_values: tuple[int, ...] | None = None
    iterations: int = 200


def grid_cells(kind, M: int, T: int, grid: TradeoffGrid) -> tuple[np.ndarray, np.ndarray]:
    """All admissible (K, tau) pairs in (K, tau) lexicographic order."""
    kind = DetectorKind(kind)
    tau_max = min(grid.tau_max or T - 1, T - 1)
    if grid.K_values is not None:
        Ks = sorted(set(int(k) for k in grid.K_values))
    else:
        Ks = range(grid.K_min, min(grid.K_max or T - 1, T - 1) + 1)
    cells = [
        (K, tau)
        for K in Ks
        if K >= 1 and (kind is not DetectorKind.ZF or K <= M - 1)
        for tau in (range(K, tau_max + 1) if grid.tau_values is None
                    else sorted(t for t in set(grid.tau_values) if K <= t <= tau_max))
    ]
    if not cells:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    arr = np.array(cells)
    return arr[:, 0], arr[:, 1]


def solve_pu(kind, M, K, tau, T, se_target, Lb, beta, pu_min, pu_max, iterations=200):
    """Vectorized bisection in log(pu) for se(pu) = se_target (se is increasing in pu).

    Returns (pu, attainable_mask).
    """
    K = np.asarray(K, dtype=float)
    tau = np.asarray(tau, dtype=float)
    ceiling = _se(kind, M, K, tau, pu_max, T, Lb, beta)
    ok = ceiling >= se_target
    lo = np.full(K.shape, np.log(pu_min))
    hi = np.full(K.shape, np.log(pu_max))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = _se(kind, M, K, tau, np.exp(mid), T, Lb, beta) >= se_target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return np.exp(hi), ok


def optimize_tradeoff(kind, M: int, T: int, se_target: float, grid: TradeoffGrid | None = None,
                      L: int = 1, beta_inter: float = 0.0) -> TradeoffPoint:
    """Maximize energy efficiency subject to a fixed spectral efficiency.

    For every admissible (K, tau) the pu meeting the target is found by
    bisection; the best cell wins, ties broken by lowest K, then tau.
    """
    kind = DetectorKind(kind)
    grid = grid or TradeoffGrid()
    if not se_target > 0:
        raise ConfigError("se_target must be positive")
    if kind is DetectorKind.MRC and M < 2:
        raise ValidityError("MRC needs M >= 2")
    if kind is DetectorKind.MMSE:
        raise ValidityError("optimizer supports MRC and ZF")
    Ks, taus = grid_cells(kind, M, T, grid)
    if Ks.size == 0:
        raise ConfigError("empty (K, tau) grid")
    Lb = lbar(L, beta_inter)
    pu, ok = solve_pu(kind, M, Ks, taus, T, se_target, Lb, beta_inter, grid.pu_min, grid.pu_max, grid.iterations)
    if not ok.any():
        raise UnattainableError(f"spectral efficiency {se_target} unattainable on the whole grid")
    ee = np.where(ok, se_target / pu, -np.inf)
    j = int(np.argmax(ee))  # first maximum: lowest K, then lowest tau
    se = float(_se(kind, M, float(Ks[j]), float(taus[j]), pu[j], T, Lb, beta_inter))
    return TradeoffPoint(se, se / float(pu[j]), float(pu[j]), int(Ks[j]), int(taus[j]), kind)


def optimize_reference(T: int, se_target: float, pu_min: float = 1e-6, pu_max: float = 1e6) -> TradeoffPoint:
    """Single-antenna, single-user curve: best (pu, tau) for a target SE,
    using the exact expectation rather than a bound."""
    taus = np.arange(1, T)
    lo = np.full(taus.size, np.log(pu_min))
    hi = np.full(taus.size, np.log(pu_max))
    ok = reference_se_exact(taus, pu_max, T) >= se_target
    if not ok.any():
        raise UnattainableError(f"reference link cannot reach {se_target}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = reference_se_exact(taus, np.exp(mid), T) >= se_target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    pu = np.exp(hi)
    ee = np.where(ok, se_target / pu, -np.inf)
    j = int(np.argmax(ee))
    se = float(reference_se_exact(taus[j], pu[j], T))
    return TradeoffPoint(se, se / float(pu[j]), float(pu[j]), 1, int(taus[j]), DetectorKind.MRC)

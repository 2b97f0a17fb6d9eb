"""Ergodic-rate estimation, power-scaling sweeps and required-power inversion.

Trials are grouped in fixed blocks; block ``b`` draws from ``stream(seed, b)``.
The same channel draws (fast fading and pilot noise) feed every detector and
both CSI modes, and results are reduced in block order, so the output does
not depend on the worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds as bnd
from .channel import LargeScaleProfile, SystemConfig
from .detection import CsiMode, DetectorKind, batch_sinr, estimation_error_power, gram, ill_conditioned
from .errors import UnattainableError, ValidityError
from .rng import blocks, complex_normal, derive_seed, stream

log = logging.getLogger(__name__)

Z95 = 1.959963984540054

ALL_CELLS = tuple((k, c) for k in DetectorKind for c in CsiMode)


@dataclass(frozen=True)
class RateEstimate:
    mean_rate: float
    ci_halfwidth: float
    trials: int
    rejected_trials: int
    bound: bnd.BoundResult | None = None


@dataclass
class RateSamples:
    """Per-trial rates ``log2(1 + SINR)``: ``rates[(kind, csi)]`` has shape (trials, K)."""

    rates: dict
    rejected: int

    @property
    def trials(self) -> int:
        return next(iter(self.rates.values())).shape[0]


def default_trials(M: int) -> int:
    return 10_000 if M <= 128 else 1_000


def _draw_block(rng, count, M, K, sqrt_b, d_tilde, pp, need_imperfect):
    H = complex_normal(rng, (count, M, K))
    W = complex_normal(rng, (count, M, K))
    G = H * sqrt_b
    G_hat = (G + W / np.sqrt(pp)) * d_tilde if need_imperfect else None
    return G, G_hat


def _run_block(config: SystemConfig, betas: np.ndarray, cells, seed: int, index: int, count: int):
    M, K, pu, tau = config.M, config.K, config.pu, config.tau
    pp = tau * pu
    sqrt_b = np.sqrt(betas)
    s = betas + 1.0 / pp
    d_tilde = betas / s
    need_imperfect = any(c is CsiMode.IMPERFECT for _, c in cells)
    rng = stream(seed, index)

    G, G_hat = _draw_block(rng, count, M, K, sqrt_b, d_tilde, pp, need_imperfect)
    grams = {CsiMode.PERFECT: gram(G)}
    if need_imperfect:
        grams[CsiMode.IMPERFECT] = gram(G_hat)
    bad = np.zeros(count, dtype=bool)
    for g in grams.values():
        bad |= ill_conditioned(g)
    rejected = 0
    # redraw rejected trials from the same block stream until none remain
    while bad.any():
        idx = np.flatnonzero(bad)
        rejected += idx.size
        G2, Gh2 = _draw_block(rng, idx.size, M, K, sqrt_b, d_tilde, pp, need_imperfect)
        new = {CsiMode.PERFECT: gram(G2)}
        if need_imperfect:
            new[CsiMode.IMPERFECT] = gram(Gh2)
        still = np.zeros(idx.size, dtype=bool)
        for mode, g in new.items():
            grams[mode][idx] = g
            still |= ill_conditioned(g)
        bad[:] = False
        bad[idx[still]] = True

    err = estimation_error_power(pu, tau, betas)
    out = {}
    for kind, csi in cells:
        e = 0.0 if csi is CsiMode.PERFECT else err
        out[kind, csi] = np.log2(1.0 + batch_sinr(kind, grams[csi], pu, e))
    return out, rejected


def simulate_rates(config: SystemConfig, betas: LargeScaleProfile, trials: int, seed: int,
                   cells=ALL_CELLS, workers: int = 1) -> RateSamples:
    """Per-trial rates for the requested (detector, CSI) cells."""
    b = np.asarray(betas.betas, dtype=float)
    if b.size != config.K:
        raise ValueError(f"profile has {b.size} users, config K={config.K}")
    cells = tuple((DetectorKind(k), CsiMode(c)) for k, c in cells)
    for kind, _ in cells:
        if kind is DetectorKind.ZF and config.M < config.K:
            raise ValidityError("ZF needs M >= K")
    layout = blocks(trials)

    def job(block):
        return _run_block(config, b, cells, seed, *block)

    if workers > 1 and len(layout) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, layout))
    else:
        results = [job(block) for block in layout]
    rates = {cell: np.concatenate([r[0][cell] for r in results]) for cell in cells}
    rejected = sum(r[1] for r in results)
    if rejected:
        log.info("redrew %d ill-conditioned trials", rejected)
    return RateSamples(rates, rejected)


def _estimate(x: np.ndarray, rejected: int, bound=None) -> RateEstimate:
    n = x.size
    mean = float(np.mean(x))
    ci = float(Z95 * np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return RateEstimate(mean, ci, n, rejected, bound)


def ergodic_rate(config: SystemConfig, kind, csi_mode, betas: LargeScaleProfile, trials: int, seed: int,
                 workers: int = 1) -> list[RateEstimate]:
    """Per-user ergodic rate with a 95% CI, paired with the closed-form bound."""
    kind, csi_mode = DetectorKind(kind), CsiMode(csi_mode)
    samples = simulate_rates(config, betas, trials, seed, ((kind, csi_mode),), workers)
    x = samples.rates[kind, csi_mode]
    bl = bnd.user_bounds(kind, csi_mode, config.M, config.pu, betas.betas, config.tau, strict=False)
    return [_estimate(x[:, k], samples.rejected, bl[k]) for k in range(config.K)]


def sum_rate_estimate(samples: RateSamples, kind, csi_mode, scale: float = 1.0) -> RateEstimate:
    """Sum over users of the per-trial rates, optionally scaled (e.g. by (T-tau)/T)."""
    x = scale * samples.rates[DetectorKind(kind), CsiMode(csi_mode)].sum(axis=1)
    return _estimate(x, samples.rejected)


@dataclass(frozen=True)
class SweepPoint:
    M: int
    pu: float
    mean: float
    ci: float
    bound: float


def power_scaling_sweep(kind, csi_mode, Eu: float, exponent: float, M_list, K: int, tau: int,
                        betas: LargeScaleProfile, trials: int, seed: int, workers: int = 1) -> list[SweepPoint]:
    """Sum rate versus M with pu = Eu / M**exponent (exponent 1 or 1/2)."""
    kind, csi_mode = DetectorKind(kind), CsiMode(csi_mode)
    out = []
    for j, M in enumerate(M_list):
        pu = Eu / M**exponent
        cfg = SystemConfig(M=M, K=K, tau=tau, T=max(tau, 1), pu=pu)
        samples = simulate_rates(cfg, betas, trials, derive_seed(seed, j), ((kind, csi_mode),), workers)
        est = sum_rate_estimate(samples, kind, csi_mode)
        try:
            b = bnd.sum_bound(kind, csi_mode, M, pu, betas.betas, tau)
        except ValidityError:
            b = float("nan")
        out.append(SweepPoint(M, pu, est.mean_rate, est.ci_halfwidth, b))
    return out


def required_power(kind, csi_mode, target_rate_per_user: float, M: int, K: int, tau: int,
                   betas, *, rtol: float = 1e-10, pu_max: float = 1e12) -> float:
    """Smallest pu at which the mean per-user closed-form bound reaches the target.

    Bisection in log(pu); raises UnattainableError when the bound saturates
    below the target (e.g. MRC interference ceiling).
    """
    kind, csi_mode = DetectorKind(kind), CsiMode(csi_mode)
    b = np.asarray(getattr(betas, "betas", betas), dtype=float)
    if b.size != K:
        raise ValueError(f"K={K} but {b.size} gains")

    def rate(pu):
        return bnd.sum_bound(kind, csi_mode, M, pu, b, tau) / K

    if rate(pu_max) < target_rate_per_user:
        raise UnattainableError(
            f"{kind.value}/{csi_mode.value} bound saturates at {rate(pu_max):.4g} "
            f"< target {target_rate_per_user} bits/channel use"
        )
    lo, hi = 1e-3, 1.0
    while rate(lo) >= target_rate_per_user:
        lo /= 1e3
    while rate(hi) < target_rate_per_user:
        hi *= 10.0
    while hi / lo - 1.0 > rtol:
        mid = np.sqrt(lo * hi)
        if rate(mid) >= target_rate_per_user:
            hi = mid
        else:
            lo = mid
    return float(hi)

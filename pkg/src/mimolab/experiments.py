"""Experiment registry: each entry turns a parameter map into CSV records.

Every record repeats the full parameter tuple so an output file is
self-describing.  Columns holding dB values end in ``_db``.

Column-to-axis mapping for plotting:

=================  =====================  ==========================================
experiment         x axis                 y axis (one curve per ...)
=================  =====================  ==========================================
fig1               M                      bound, mc_mean (detector, csi)
fig2, fig3         M                      bound, mc_mean (detector, csi, exponent)
fig4, fig5         M                      pu_db (detector, csi)
fig6, fig8         se                     ee_relative (curve, M, detector, beta)
fig7               se_target              K, tau (detector)
table1             k                      bound (detector, csi)
beta-intercell     --                     beta per (nu, sigma_db, reuse)
reference-mode     --                     se, ee, tau_opt
=================  =====================  ==========================================

Rates in fig1-fig3 and table1 are sums over users in bits per channel use
without the pilot overhead; the ``overhead`` column carries (T - tau)/T for
imperfect-CSI rows (1 for perfect CSI).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds as bnd
from .channel import CellGeometry, LargeScaleProfile, SystemConfig, draw_large_scale
from .detection import CsiMode, DetectorKind
from .errors import ConfigError, UnattainableError, ValidityError
from .intercell import estimate_intercell_beta
from .montecarlo import ALL_CELLS, default_trials, required_power, simulate_rates, sum_rate_estimate
from .rng import derive_seed, stream
from .tradeoff import (
    TradeoffGrid,
    ee_multicell,
    optimize_reference,
    optimize_tradeoff,
    reference_mode,
)

log = logging.getLogger(__name__)

Row = dict


def db_to_lin(x: float) -> float:
    return 10.0 ** (x / 10.0)


def lin_to_db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else float("nan")


def coherence_interval_from_ofdm(Ts_us: float, Tu_us: float, Tc_ms: float) -> int:
    """Coherence interval in symbols from OFDM numerology.

    Both factors are whole numbers (symbols per coherence time, subcarriers
    per coherence bandwidth), so each is rounded before multiplying:
    71.4 / 66.7 us with Tc = 1 ms gives 14 * 14 = 196.
    """
    if not (Ts_us > 0 and Tu_us > 0 and Tc_ms > 0):
        raise ConfigError("Ts, Tu and Tc must be positive")
    Tg = Ts_us - Tu_us
    if Tg <= 0:
        raise ConfigError(f"guard interval Ts - Tu = {Tg:g} us must be positive")
    return int(round(Tc_ms * 1000.0 / Ts_us)) * int(round(Tu_us / Tg))


def int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def str_list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


GEOMETRY_DEFAULTS = {"radius_m": 1000.0, "r_h_m": 100.0, "sigma_db": 8.0, "nu": 3.8}


def geometry_of(p) -> CellGeometry:
    return CellGeometry(radius_m=p["radius_m"], r_h_m=p["r_h_m"], shadow_sigma_db=p["sigma_db"], nu=p["nu"])


def profile_of(p, K: int, seed: int) -> LargeScaleProfile:
    """``profile=unit`` gives beta = 1; ``geometry`` draws once per experiment."""
    if p["profile"] == "unit":
        return LargeScaleProfile.uniform(K)
    if p["profile"] == "geometry":
        return draw_large_scale(geometry_of(p), K, stream(seed, 0xBE7A))
    raise ConfigError(f"profile must be 'unit' or 'geometry', got {p['profile']!r}")


@dataclass(frozen=True)
class Experiment:
    name: str
    defaults: dict
    run: Callable  # (params, seed, trials | None, workers) -> list[Row]
    doc: str = ""


def _rate_rows(p, seed, trials, workers, pu_of_M, extra, sweep=0) -> list[Row]:
    """Bounds and Monte-Carlo sum rates for all six cells over the M sweep."""
    K, tau, T = p["K"], p["tau"], p["T"]
    betas = profile_of(p, K, seed)
    rows = []
    for j, M in enumerate(int_list(p["M_list"])):
        pu = pu_of_M(M)
        n = trials or default_trials(M)
        cfg = SystemConfig(M=M, K=K, tau=tau, T=T, pu=pu)
        samples = simulate_rates(cfg, betas, n, derive_seed(seed, sweep, j), ALL_CELLS, workers)
        for kind, csi in ALL_CELLS:
            est = sum_rate_estimate(samples, kind, csi)
            try:
                bound = bnd.sum_bound(kind, csi, M, pu, betas.betas, tau)
            except ValidityError:
                bound = float("nan")
            overhead = (T - tau) / T if csi is CsiMode.IMPERFECT else 1.0
            rows.append({
                "M": M, "detector": kind.value, "csi": csi.value, "pu_db": lin_to_db(pu),
                "bound": bound, "mc_mean": est.mean_rate, "ci": est.ci_halfwidth,
                "overhead": overhead, "trials": n, "rejected": est.rejected_trials,
                **extra(M, kind, csi, betas), "K": K, "tau": tau, "T": T,
                "profile": p["profile"], **{k: p[k] for k in GEOMETRY_DEFAULTS}, "seed": seed,
            })
        log.info("M=%d done (%d trials)", M, n)
    return rows


def run_fig1(p, seed, trials, workers):
    pu = db_to_lin(p["pu_db"])
    return _rate_rows(p, seed, trials, workers, lambda M: pu, lambda *a: {})


def run_power_scaling(p, seed, trials, workers):
    Eu = db_to_lin(p["Eu_db"])
    tau = p["tau"]
    rows = []
    for e_idx, exponent in enumerate(float_list(p["exponents"])):
        def limit(M, kind, csi, betas, exponent=exponent):
            b = betas.betas
            if csi is CsiMode.PERFECT and exponent == 1.0:
                lim = float(np.sum(np.log2(1 + b * Eu)))
            elif csi is CsiMode.IMPERFECT and exponent == 0.5:
                lim = float(np.sum(np.log2(1 + tau * b**2 * Eu**2)))
            elif csi is CsiMode.IMPERFECT and exponent > 0.5:
                lim = 0.0
            else:
                lim = float("inf")
            return {"exponent": exponent, "Eu_db": p["Eu_db"], "limit": lim}

        rows += _rate_rows(p, seed, trials, workers, lambda M, exponent=exponent: Eu / M**exponent,
                           limit, sweep=e_idx)
    return rows


def run_required_power(p, seed, trials, workers):
    K, tau = p["K"], p["tau"]
    betas = profile_of(p, K, seed)
    rows = []
    for M in int_list(p["M_list"]):
        for kind, csi in ALL_CELLS:
            status, pu = "ok", float("nan")
            try:
                pu = required_power(kind, csi, p["target"], M, K, tau, betas)
            except UnattainableError:
                status = "unattainable"
            except ValidityError:
                status = "invalid"
            rows.append({
                "M": M, "detector": kind.value, "csi": csi.value, "target": p["target"],
                "pu": pu, "pu_db": lin_to_db(pu), "status": status, "K": K, "tau": tau,
                "profile": p["profile"], **{k: p[k] for k in GEOMETRY_DEFAULTS}, "seed": seed,
            })
    return rows


def _reference(p, seed):
    ref = reference_mode(p["T"], db_to_lin(p["ref_pu_db"]), p["reference_trials"], derive_seed(seed, 99))
    return ref


def _tradeoff_row(curve, M, kind, target, pt, ref_ee, extra) -> Row:
    if pt is None:
        vals = {"se": float("nan"), "ee": float("nan"), "ee_relative": float("nan"),
                "pu": float("nan"), "pu_db": float("nan"), "K": "", "tau": "", "status": "unattainable"}
    else:
        vals = {"se": pt.se, "ee": pt.ee, "ee_relative": pt.ee / ref_ee, "pu": pt.pu,
                "pu_db": lin_to_db(pt.pu), "K": pt.K, "tau": pt.tau, "status": "ok"}
    return {"curve": curve, "M": M, "detector": kind, "se_target": target, **vals, **extra}


def _grid(p, K_values=None) -> TradeoffGrid:
    return TradeoffGrid(K_max=p["K_max"] or None, pu_min=p["pu_min"], pu_max=p["pu_max"], K_values=K_values)


def _opt(kind, M, T, target, grid, L=1, beta=0.0):
    try:
        return optimize_tradeoff(kind, M, T, target, grid, L, beta)
    except UnattainableError:
        return None


def _ref_curve(T, target):
    try:
        return optimize_reference(T, target)
    except UnattainableError:
        return None


def run_fig6(p, seed, trials, workers):
    T = p["T"]
    ref = _reference(p, seed)
    extra = {"T": T, "reference_ee": ref.ee, "seed": seed}
    rows = []
    targets = float_list(p["se_targets"])
    for target in targets:
        rows.append(_tradeoff_row("reference", 1, "any", target, _ref_curve(T, target), ref.ee, extra))
    for M in int_list(p["single_user_M"]):
        for target in targets:
            pt = _opt("mrc", M, T, target, _grid(p, (1,)))
            rows.append(_tradeoff_row("single-user", M, "any", target, pt, ref.ee, extra))
    for M in int_list(p["M_list"]):
        for det in str_list(p["detectors"]):
            for target in targets:
                pt = _opt(det, M, T, target, _grid(p))
                rows.append(_tradeoff_row("multiuser", M, det, target, pt, ref.ee, extra))
        log.info("fig6 M=%d done", M)
    return rows


def run_fig7(p, seed, trials, workers):
    rows = []
    for det in str_list(p["detectors"]):
        for target in float_list(p["se_targets"]):
            pt = _opt(det, p["M"], p["T"], target, _grid(p))
            rows.append({
                "se_target": target, "detector": det,
                "K": pt.K if pt else "", "tau": pt.tau if pt else "",
                "pu": pt.pu if pt else float("nan"), "ee": pt.ee if pt else float("nan"),
                "status": "ok" if pt else "unattainable", "M": p["M"], "T": p["T"], "seed": seed,
            })
    return rows


def run_fig8(p, seed, trials, workers):
    T, M, L = p["T"], p["M"], p["L"]
    ref = _reference(p, seed)
    if p["beta_source"] == "fixed":
        betas = float_list(p["betas"])
    elif p["beta_source"] == "estimate":
        cases = [(3.8, 1), (3.0, 1), (3.8, 3)]
        betas = [
            estimate_intercell_beta(geometry_of(p), nu, p["sigma_db"], reuse, p["beta_samples"],
                                    derive_seed(seed, j), workers)
            for j, (nu, reuse) in enumerate(cases)
        ]
    else:
        raise ConfigError("beta_source must be 'fixed' or 'estimate'")
    rows = []
    targets = float_list(p["se_targets"])
    extra0 = {"L": 1, "beta": 0.0, "T": T, "reference_ee": ref.ee, "seed": seed}
    for target in targets:
        rows.append(_tradeoff_row("reference", 1, "any", target, _ref_curve(T, target), ref.ee, extra0))
    for beta in betas:
        extra = {"L": L, "beta": beta, "T": T, "reference_ee": ref.ee, "seed": seed}
        for det in str_list(p["detectors"]):
            for target in targets:
                pt = _opt(det, M, T, target, _grid(p), L, beta)
                rows.append(_tradeoff_row("multicell", M, det, target, pt, ref.ee, extra))
        log.info("fig8 beta=%g done", beta)
    return rows


def run_table1(p, seed, trials, workers):
    K, tau, M = p["K"], p["tau"], p["M"]
    pu = db_to_lin(p["pu_db"])
    betas = profile_of(p, K, seed)
    rows = []
    for (kind, csi), results in bnd.table1(M, pu, betas.betas, tau).items():
        if p.get("detector") and kind.value != p["detector"]:
            continue
        if p.get("csi") and csi.value != p["csi"]:
            continue
        for r in results:
            rows.append({
                "k": r.k, "detector": kind.value, "csi": csi.value, "bound": r.rate,
                "valid": int(r.valid), "beta_k": float(betas.betas[r.k]), "M": M, "K": K,
                "tau": tau, "pu_db": p["pu_db"], "profile": p["profile"], "seed": seed,
            })
    return rows


def run_beta_intercell(p, seed, trials, workers):
    samples = trials or p["samples"]
    nus, sigmas, reuses = float_list(p["nu_list"]), float_list(p["sigma_list"]), int_list(p["reuse_list"])
    if not len(nus) == len(sigmas) == len(reuses):
        raise ConfigError("nu_list, sigma_list and reuse_list must have equal length")
    geom = CellGeometry(radius_m=p["radius_m"], r_h_m=p["r_h_m"])
    rows = []
    for j, (nu, sigma, reuse) in enumerate(zip(nus, sigmas, reuses)):
        beta = estimate_intercell_beta(geom, nu, sigma, reuse, samples, derive_seed(seed, j), workers)
        rows.append({"nu": nu, "sigma_db": sigma, "reuse": reuse, "beta": beta, "samples": samples,
                     "radius_m": p["radius_m"], "r_h_m": p["r_h_m"], "seed": seed})
    return rows


def run_reference_mode(p, seed, trials, workers):
    n = trials or p["trials"]
    ref = reference_mode(p["T"], db_to_lin(p["pu_db"]), n, seed)
    return [{"se": ref.se, "ee": ref.ee, "tau_opt": ref.tau_opt, "T": ref.T,
             "pu_db": p["pu_db"], "trials": n, "seed": seed}]


def run_required_power_single(p, seed, trials, workers):
    betas = profile_of(p, p["K"], seed)
    pu = required_power(p["detector"], p["csi"], p["target"], p["M"], p["K"], p["tau"], betas)
    return [{"detector": p["detector"], "csi": p["csi"], "target": p["target"], "pu": pu,
             "pu_db": lin_to_db(pu), "M": p["M"], "K": p["K"], "tau": p["tau"], "profile": p["profile"],
             "seed": seed}]


def run_tradeoff_single(p, seed, trials, workers):
    K_values = tuple(int_list(p["K_values"])) if p["K_values"] else None
    pt = optimize_tradeoff(p["detector"], p["M"], p["T"], p["se_target"], _grid(p, K_values), p["L"], p["beta"])
    check = ee_multicell(pt.detector, p["M"], pt.K, pt.tau, pt.pu, p["T"], p["L"], p["beta"])
    return [{"detector": pt.detector.value, "se_target": p["se_target"], "se": check.se, "ee": check.ee,
             "pu": pt.pu, "pu_db": lin_to_db(pt.pu), "K": pt.K, "tau": pt.tau, "M": p["M"],
             "T": p["T"], "L": p["L"], "beta": p["beta"]}]


_TRADEOFF_GRID = {"K_max": 0, "pu_min": 1e-6, "pu_max": 1e6}
_TARGETS = "1,2,5,10,20,30,40,50,60,70,80"

REGISTRY: dict[str, Experiment] = {}


def _register(name, defaults, fn, doc=""):
    REGISTRY[name] = Experiment(name, defaults, fn, doc)


_register("fig1", {"M_list": "16,32,64,128,256", "K": 10, "tau": 10, "T": 196, "pu_db": 10.0,
                   "profile": "geometry", **GEOMETRY_DEFAULTS}, run_fig1,
          "bounds vs Monte-Carlo sum rates over M")
for _name, _eu in (("fig2", 20.0), ("fig3", 5.0)):
    _register(_name, {"M_list": "16,32,64,128,256,512,1024", "K": 10, "tau": 10, "T": 196, "Eu_db": _eu,
                      "exponents": "1,0.5", "profile": "geometry", **GEOMETRY_DEFAULTS}, run_power_scaling,
              "sum rate with pu = Eu / M^exponent")
for _name, _target in (("fig4", 1.0), ("fig5", 2.0)):
    _register(_name, {"M_list": "16,24,32,48,64,96,128,192,256,384,512", "K": 10, "tau": 10,
                      "target": _target, "profile": "geometry", **GEOMETRY_DEFAULTS}, run_required_power,
              "pu required for a per-user rate target")
_register("fig6", {"M_list": "50,100", "single_user_M": "100", "detectors": "mrc,zf", "T": 196,
                   "se_targets": _TARGETS, "ref_pu_db": 10.0, "reference_trials": 1_000_000,
                   **_TRADEOFF_GRID}, run_fig6, "relative EE vs SE, single cell")
_register("fig7", {"M": 100, "detectors": "mrc,zf", "T": 196, "se_targets": _TARGETS, **_TRADEOFF_GRID},
          run_fig7, "optimal K and tau vs SE")
_register("fig8", {"M": 100, "L": 7, "detectors": "mrc,zf", "T": 196, "se_targets": _TARGETS,
                   "betas": "0.32,0.11,0.04", "beta_source": "fixed", "beta_samples": 1_000_000,
                   "ref_pu_db": 10.0, "reference_trials": 1_000_000, **GEOMETRY_DEFAULTS, **_TRADEOFF_GRID},
          run_fig8, "relative EE vs SE, multicell")
_register("table1", {"M": 100, "K": 10, "tau": 10, "pu_db": 10.0, "profile": "unit", "detector": "",
                     "csi": "", **GEOMETRY_DEFAULTS}, run_table1, "all six per-user bounds")
_register("beta-intercell", {"nu_list": "3.8,3,3.8", "sigma_list": "8,8,8", "reuse_list": "1,1,3",
                             "samples": 1_000_000, "radius_m": 1000.0, "r_h_m": 100.0},
          run_beta_intercell, "intercell interference factor")
_register("reference-mode", {"T": 196, "pu_db": 10.0, "trials": 1_000_000}, run_reference_mode,
          "single-antenna reference link")

# Parameter sets behind the non-``run`` subcommands.
COMMANDS: dict[str, Experiment] = {
    "bounds": Experiment("bounds", REGISTRY["table1"].defaults, run_table1),
    "required-power": Experiment("required-power", {"detector": "zf", "csi": "perfect", "target": 1.0, "M": 100,
                                                    "K": 10, "tau": 10, "profile": "unit", **GEOMETRY_DEFAULTS},
                                 run_required_power_single),
    "tradeoff": Experiment("tradeoff", {"detector": "mrc", "M": 100, "T": 196, "se_target": 10.0, "L": 1,
                                        "beta": 0.0, "K_values": "", **_TRADEOFF_GRID}, run_tradeoff_single),
    "beta-intercell": REGISTRY["beta-intercell"],
    "reference-mode": REGISTRY["reference-mode"],
}


def coerce(defaults: dict, overrides: dict) -> dict:
    """Merge overrides into defaults, converting to each default's type."""
    params = dict(defaults)
    for key, raw in overrides.items():
        if key not in defaults:
            raise ConfigError(f"unknown parameter {key!r}; known: {', '.join(sorted(defaults))}")
        ref = defaults[key]
        try:
            if isinstance(ref, bool):
                params[key] = str(raw).lower() in ("1", "true", "yes")
            elif isinstance(ref, int):
                params[key] = int(float(raw)) if float(raw).is_integer() else int(raw)
            elif isinstance(ref, float):
                params[key] = float(raw)
            else:
                params[key] = str(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return params


def run_experiment(name: str, overrides: dict | None = None, seed: int = 0, trials: int | None = None,
                   workers: int = 1, registry: dict | None = None) -> list[Row]:
    registry = REGISTRY if registry is None else registry
    if name not in registry:
        raise ConfigError(f"unknown experiment {name!r}; known: {', '.join(registry)}")
    exp = registry[name]
    params = coerce(exp.defaults, overrides or {})
    if trials is not None and trials < 1:
        raise ConfigError("trials must be >= 1")
    return exp.run(params, int(seed), trials, int(workers))

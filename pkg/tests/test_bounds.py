import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimolab import bounds as bnd
from mimolab.detection import CsiMode, DetectorKind
from mimolab.errors import DimensionError, ValidityError

ONES10 = np.ones(10)
LOG2_101 = math.log2(101)


# --- closed forms at a reference point -------------------------------------

def test_mrc_perfect_value():
    assert bnd.mrc_bound_perfect(100, 10, 10.0, ONES10, 0) == pytest.approx(math.log2(1 + 990 / 91), rel=1e-12)
    assert bnd.mrc_bound_perfect(100, 10, 10.0, ONES10, 0) == pytest.approx(3.570, abs=5e-4)


def test_zf_perfect_value():
    assert bnd.zf_bound_perfect(100, 10, 10.0, ONES10, 0) == pytest.approx(math.log2(901), rel=1e-12)
    assert bnd.zf_bound_perfect(100, 10, 10.0, ONES10, 0) == pytest.approx(9.815, abs=5e-4)


def test_mrc_imperfect_value():
    v = bnd.mrc_bound_imperfect(100, 10, 10.0, 10, ONES10, 0)
    assert v == pytest.approx(math.log2(1 + 99000 / 9201), rel=1e-12)
    assert v == pytest.approx(3.556, abs=5e-4)


def test_zf_imperfect_value():
    v = bnd.zf_bound_imperfect(100, 10, 10.0, 10, ONES10, 0)
    assert v == pytest.approx(math.log2(1 + 90000 / 201), rel=1e-12)
    assert v == pytest.approx(8.810, abs=5e-4)


def test_single_user_perfect_collapse():
    M, pu, b = 40, 0.3, np.array([2.0])
    expected = math.log2(1 + pu * (M - 1) * 2.0)
    assert bnd.mrc_bound_perfect(M, 1, pu, b, 0) == pytest.approx(expected, rel=1e-14)
    assert bnd.zf_bound_perfect(M, 1, pu, b, 0) == bnd.mrc_bound_perfect(M, 1, pu, b, 0)


def test_zf_imperfect_single_user_collapse():
    M, pu, beta = 30, 0.7, 1.3
    expected = math.log2(1 + pu**2 * (M - 1) * beta**2 / (2 * pu * beta + 1))
    assert bnd.zf_bound_imperfect(M, 1, pu, 1, [beta], 0) == pytest.approx(expected, rel=1e-12)


# --- large-M limits ----------------------------------------------------------

def test_mrc_perfect_power_scaling_limit():
    # interference-free user at the stated M; with K = 10 the O(K Eu / M) term needs a larger M
    assert abs(bnd.mrc_bound_perfect(10**6, 1, 100 / 10**6, [1.0], 0) - LOG2_101) < 1e-3
    assert abs(bnd.mrc_bound_perfect(10**7, 10, 100 / 10**7, ONES10, 0) - LOG2_101) < 1e-3


def test_zf_perfect_power_scaling_limit():
    assert abs(bnd.zf_bound_perfect(10**6, 10, 100 / 10**6, ONES10, 0) - LOG2_101) < 1e-3


@pytest.mark.parametrize("fn", [bnd.mrc_bound_imperfect, bnd.zf_bound_imperfect])
def test_imperfect_sqrt_power_scaling_limit(fn):
    M = 10**8
    assert abs(fn(M, 10, math.sqrt(10) / math.sqrt(M), 10, ONES10, 0) - LOG2_101) < 1e-2


def test_mrc_imperfect_low_power_slope():
    M, K, tau, beta, pu = 100, 10, 10, 1.0, 1e-4
    slope = bnd.mrc_bound_imperfect(M, K, pu, tau, np.full(K, beta), 0) / pu**2
    assert slope == pytest.approx(math.log2(math.e) * tau * (M - 1) * beta**2, rel=0.01)


def test_asymptotic_limit():
    assert bnd.asymptotic_limit("perfect", 100.0, 10, 1.0) == pytest.approx(6.658, abs=5e-4)
    assert bnd.asymptotic_limit("imperfect", math.sqrt(10), 10, 1.0) == pytest.approx(LOG2_101, rel=1e-12)
    assert bnd.asymptotic_limit("perfect", 0.0, 10, 1.0) == 0.0
    assert bnd.asymptotic_limit("imperfect", 0.0, 10, 1.0) == 0.0


def test_power_control():
    M, tau, beta = 64, 4, 0.5
    assert bnd.power_control_imperfect(M * tau * beta, M, tau, beta) == pytest.approx(1.0, rel=1e-14)
    p1 = bnd.power_control_imperfect(3.0, M, tau, beta)
    assert bnd.power_control_imperfect(3.0, 4 * M, tau, beta) == pytest.approx(p1 / 2, rel=1e-14)


def test_power_control_matches_siso_rate():
    M, tau, beta, Eu = 10**8, 1, 0.3, 5.0
    pu = bnd.power_control_imperfect(Eu, M, tau, beta)
    rate = bnd.mrc_bound_imperfect(M, 1, pu, tau, [beta], 0)
    assert abs(rate - math.log2(1 + beta * Eu)) < 1e-2


# --- validity --------------------------------------------------------------

def test_validity_errors():
    with pytest.raises(ValidityError):
        bnd.mrc_bound_perfect(1, 1, 1.0, [1.0], 0)
    with pytest.raises(ValidityError):
        bnd.zf_bound_perfect(10, 10, 1.0, ONES10, 0)
    with pytest.raises(ValidityError):
        bnd.zf_bound_imperfect(10, 10, 1.0, 10, ONES10, 0)
    with pytest.raises(ValidityError):
        bnd.mrc_bound_imperfect(20, 10, 1.0, 5, ONES10, 0)
    with pytest.raises(ValidityError):
        bnd.mmse_bound_perfect(5, 10, 1.0, ONES10, 0)
    with pytest.raises(DimensionError):
        bnd.zf_bound_perfect(20, 10, 1.0, np.ones(9), 0)
    with pytest.raises(DimensionError):
        bnd.zf_bound_perfect(20, 10, 1.0, ONES10, 10)


def test_mmse_small_alpha_is_invalid():
    # M = K = 1 gives alpha = 1: the Gamma bound is undefined
    with pytest.raises(ValidityError):
        bnd.mmse_bound_perfect(1, 1, 1.0, [1.0], 0)


def test_user_bounds_non_strict_flags_invalid():
    res = bnd.user_bounds("zf", "perfect", 10, 1.0, ONES10, strict=False)
    assert all(not r.valid and math.isnan(r.rate) for r in res)
    with pytest.raises(ValidityError):
        bnd.user_bounds("zf", "perfect", 10, 1.0, ONES10)


def test_dispatch_and_table():
    t = bnd.table1(100, 10.0, ONES10, 10)
    assert len(t) == 6
    r = t[DetectorKind.ZF, CsiMode.IMPERFECT][3]
    assert r.k == 3 and r.valid
    assert r.rate == bnd.zf_bound_imperfect(100, 10, 10.0, 10, ONES10, 3)
    assert bnd.sum_bound("mrc", "perfect", 100, 10.0, ONES10) == pytest.approx(
        10 * bnd.mrc_bound_perfect(100, 10, 10.0, ONES10, 0), rel=1e-14)
    with pytest.raises(ValueError):
        bnd.bound("mrc", "imperfect", 100, 10, 10.0, ONES10, 0)


# --- Gamma fixed point -------------------------------------------------------

def bisection_oracle(M, K, products, k):
    """Independent root finder: bisection on mu, then kappa evaluated directly."""
    p = np.delete(np.asarray(products, float), k)
    c = (K - 1) / M

    def f(mu):
        return mu - np.mean(1 / (M * p * (1 - c + c * mu) + 1))

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    mu = (lo + hi) / 2
    den2 = (M * p * (1 - c + c * mu) + 1) ** 2
    kappa = np.sum((p * mu + 1) / den2) / (1 + np.sum(p / den2))
    return mu, kappa


def test_fixed_point_single_user():
    assert bnd.solve_fixed_point(50, 1, [3.0], 0) == (0.0, 0.0)


def test_fixed_point_against_bisection():
    products = np.full(10, 10.0)
    mu, kappa = bnd.solve_fixed_point(100, 10, products, 0)
    mu_o, kappa_o = bisection_oracle(100, 10, products, 0)
    assert abs(mu - mu_o) < 1e-8 and abs(kappa - kappa_o) < 1e-8


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 20), st.integers(0, 200), st.integers(0, 2**31))
def test_fixed_point_properties(K, extra, seed):
    M = K + extra
    rng = np.random.default_rng(seed)
    products = 10 ** rng.uniform(-3, 3, K)
    k = int(rng.integers(K))
    mu, kappa = bnd.solve_fixed_point(M, K, products, k)
    assert 0 < mu < 1
    r_mu, r_kappa = bnd.fixed_point_residuals(mu, kappa, M, K, products, k)
    assert r_mu < 1e-10 and r_kappa < 1e-10
    mu_o, kappa_o = bisection_oracle(M, K, products, k)
    assert abs(mu - mu_o) < 1e-8 and abs(kappa - kappa_o) < 1e-8


def test_mmse_single_user_perfect():
    M, pu, beta = 64, 2.0, 0.7
    res, g = bnd.mmse_bound_perfect(M, 1, pu, [beta], 0)
    assert g.alpha == M and g.theta == pytest.approx(pu * beta, rel=1e-15)
    expected = math.log2(1 + (M - 1) * pu * beta)
    assert abs(res.rate - expected) < 1e-10
    assert abs(res.rate - bnd.zf_bound_perfect(M, 1, pu, [beta], 0)) < 1e-10


def test_mmse_single_user_imperfect():
    M, pu, tau, beta = 64, 2.0, 3, 0.7
    res, _ = bnd.mmse_bound_imperfect(M, 1, pu, tau, [beta], 0)
    omega = 1 / (beta / (tau * pu * beta + 1) + 1 / pu)
    b_hat = tau * pu * beta**2 / (tau * pu * beta + 1)
    assert res.rate == pytest.approx(math.log2(1 + (M - 1) * omega * b_hat), rel=1e-12)


def test_mmse_dominates_zf_reference_point():
    assert bnd.mmse_bound_perfect(100, 10, 10.0, ONES10, 0)[0].rate >= bnd.zf_bound_perfect(100, 10, 10.0, ONES10, 0)
    assert (bnd.mmse_bound_imperfect(100, 10, 10.0, 10, ONES10, 0)[0].rate
            >= bnd.zf_bound_imperfect(100, 10, 10.0, 10, ONES10, 0))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(1, 100), st.floats(-2, 2), st.integers(0, 2**31))
def test_mmse_dominates_zf_random(K, extra, log_pu, seed):
    M, pu = K + extra, 10**log_pu
    betas = 10 ** np.random.default_rng(seed).uniform(-3, 0, K)
    for k in range(K):
        assert bnd.mmse_bound_perfect(M, K, pu, betas, k)[0].rate >= bnd.zf_bound_perfect(M, K, pu, betas, k) - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([("mrc", 2), ("zf", 1)]), st.sampled_from(list(CsiMode)),
       st.integers(1, 8), st.integers(0, 60), st.floats(-2, 2))
def test_bounds_increase_with_M_and_pu(kind_off, csi, K, extra, log_pu):
    kind, off = kind_off
    M, pu, tau = K + off + extra, 10**log_pu, K
    b = np.linspace(0.2, 1.0, K)
    r = bnd.bound(kind, csi, M, K, pu, b, 0, tau).rate
    assert bnd.bound(kind, csi, M + 1, K, pu, b, 0, tau).rate > r
    assert bnd.bound(kind, csi, M, K, 2 * pu, b, 0, tau).rate > r


# --- Wishart identity --------------------------------------------------------

def test_wishart_scalar_case():
    assert bnd.wishart_trace_identity_check(1, 2, 1, 0)[1] == 1.0


def test_wishart_moderate():
    emp, exact = bnd.wishart_trace_identity_check(10, 100, 10_000, 0)
    assert exact == pytest.approx(1 / 9)
    assert emp == pytest.approx(exact, rel=0.02)


def test_wishart_near_threshold():
    emp, exact = bnd.wishart_trace_identity_check(5, 6, 100_000, 1)
    assert exact == 5.0
    assert emp == pytest.approx(exact, rel=0.10)


def test_wishart_rejects_square():
    with pytest.raises(ValueError):
        bnd.wishart_trace_identity_check(4, 4, 10, 0)

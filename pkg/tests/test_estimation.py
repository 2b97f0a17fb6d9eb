import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimolab.channel import LargeScaleProfile, assemble_multicell, simplified_gains
from mimolab.errors import ConfigError, DimensionError
from mimolab.estimation import (
    mmse_estimate,
    mmse_estimate_equivalent,
    multicell_mmse_estimate,
    pilot_matrix,
    shrinkage,
    simulate_pilot_observation,
)
from mimolab.rng import complex_normal, stream


def test_pilot_scalar():
    assert np.allclose(pilot_matrix(1, 1).phi, [[1.0]])


@given(st.integers(1, 32).flatmap(lambda tau: st.tuples(st.just(tau), st.integers(1, tau))))
def test_pilots_orthonormal(tk):
    tau, K = tk
    phi = pilot_matrix(tau, K).phi
    assert phi.shape == (tau, K)
    assert np.abs(phi.conj().T @ phi - np.eye(K)).max() < 1e-12


def test_pilot_square_is_unitary():
    phi = pilot_matrix(8, 8).phi
    assert np.abs(phi @ phi.conj().T - np.eye(8)).max() < 1e-12


def test_pilot_rejects_short_training():
    with pytest.raises(ConfigError):
        pilot_matrix(3, 4)


def test_observation_noiseless_identity():
    G = complex_normal(stream(0), (5, 1))
    Y = simulate_pilot_observation(G, pilot_matrix(1, 1), 1.0, np.zeros((5, 1)))
    assert np.allclose(Y, G, rtol=0, atol=1e-15)


def test_observation_zero_channel():
    N = complex_normal(stream(1), (4, 6))
    Y = simulate_pilot_observation(np.zeros((4, 3)), pilot_matrix(6, 3), 5.0, N)
    assert np.array_equal(Y, N)


def test_observation_noise_power():
    M, tau, K, pp = 8, 6, 3, 4.0
    phi = pilot_matrix(tau, K)
    rng = stream(2)
    G = complex_normal(rng, (M, K))
    acc = 0.0
    for _ in range(10_000):
        N = complex_normal(rng, (M, tau))
        Y = simulate_pilot_observation(G, phi, pp, N)
        acc += np.sum(np.abs(Y - np.sqrt(pp) * G @ phi.phi.T) ** 2) / (M * tau)
    assert acc / 10_000 == pytest.approx(1.0, rel=0.02)


def test_observation_dimension_check():
    with pytest.raises(DimensionError):
        simulate_pilot_observation(np.zeros((4, 3)), pilot_matrix(6, 3), 1.0, np.zeros((4, 5)))


def test_estimate_noiseless_limit():
    M, K, tau, pp = 6, 3, 4, 1e12
    D = LargeScaleProfile(np.array([0.5, 1.0, 2.0]))
    G = complex_normal(stream(3), (M, K)) * np.sqrt(D.betas)
    phi = pilot_matrix(tau, K)
    N = complex_normal(stream(4), (M, tau))
    est = mmse_estimate(simulate_pilot_observation(G, phi, pp, N), phi, pp, D)
    assert np.abs(est.g_hat - G).max() < 1e-4 * np.abs(G).max()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.floats(0.01, 100.0))
def test_pilot_path_matches_equivalent_path(seed, K, pp):
    M, tau = 7, K + 2
    rng = stream(seed)
    D = LargeScaleProfile(rng.uniform(0.1, 3.0, K))
    G = complex_normal(rng, (M, K)) * np.sqrt(D.betas)
    N = complex_normal(rng, (M, tau))
    phi = pilot_matrix(tau, K)
    direct = mmse_estimate(simulate_pilot_observation(G, phi, pp, N), phi, pp, D)
    equiv = mmse_estimate_equivalent(G, N @ phi.phi.conj(), pp, D)
    assert np.abs(direct.g_hat - equiv.g_hat).max() < 1e-12 * max(1.0, np.abs(G).max())


def test_estimate_zero_noise_is_shrinkage():
    D = LargeScaleProfile(np.array([1.0, 3.0]))
    G = complex_normal(stream(5), (4, 2))
    est = mmse_estimate_equivalent(G, np.zeros((4, 2)), 2.0, D)
    assert np.array_equal(est.g_hat, G * est.d_tilde)


def test_shrinkage_unit_case():
    d, e = shrinkage(1.0, [1.0])
    assert d[0] == 0.5 and e[0] == 0.5


@given(st.floats(1e-3, 1e3), st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=8))
def test_shrinkage_closed_forms(pp, betas):
    b = np.array(betas)
    d, e = shrinkage(pp, b)
    assert np.allclose(d, pp * b / (pp * b + 1), rtol=1e-12)
    assert np.allclose(e, b / (pp * b + 1), rtol=1e-12)
    # error variance plus estimate variance recovers the channel variance
    assert np.allclose(e + d * b, b, rtol=1e-12)


def _draws(n, M, K, pp, betas, seed):
    rng = stream(seed)
    D = LargeScaleProfile(betas)
    G = complex_normal(rng, (n, M, K)) * np.sqrt(D.betas)
    W = complex_normal(rng, (n, M, K))
    return G, mmse_estimate_equivalent(G, W, pp, D)


def test_error_variance_statistic():
    betas, pp = np.array([0.3, 1.0, 4.0]), 2.0
    G, est = _draws(100_000, 1, 3, pp, betas, 6)
    var = np.mean(np.abs(est.g_hat - G) ** 2, axis=(0, 1))
    assert np.allclose(var, betas / (pp * betas + 1), rtol=0.02)


def test_estimate_uncorrelated_with_error():
    G, est = _draws(100_000, 1, 2, 3.0, np.array([1.0, 2.0]), 7)
    g_hat = est.g_hat[:, 0, :]
    err = g_hat - G[:, 0, :]
    cross = np.abs(np.einsum("nk,nj->kj", g_hat.conj(), err) / g_hat.shape[0])
    assert cross.max() < 0.01


# --- pilot contamination -----------------------------------------------

def _multicell(L, beta, seed, M=5, K=3):
    rng = stream(seed)
    H = complex_normal(rng, (L, M, K))
    W = complex_normal(rng, (M, K))
    return assemble_multicell(H, simplified_gains(K, L, beta)), W


def test_multicell_single_cell_reduces_bitwise():
    mc, W = _multicell(1, 0.0, 8)
    single = mmse_estimate_equivalent(mc.G[0], W, 7.0, LargeScaleProfile.uniform(3))
    multi = multicell_mmse_estimate(mc, W, 7.0)
    assert np.array_equal(single.g_hat, multi.g_hat)
    assert np.array_equal(single.error_vars, multi.error_vars)


def test_multicell_zero_beta_reduces_bitwise():
    mc, W = _multicell(7, 0.0, 9)
    single = mmse_estimate_equivalent(mc.G[0], W, 7.0, LargeScaleProfile.uniform(3))
    multi = multicell_mmse_estimate(mc, W, 7.0)
    assert np.array_equal(single.g_hat, multi.g_hat)


def test_contamination_power_ratio():
    L, beta, n = 7, 0.32, 100_000
    H = complex_normal(stream(10), (n, L, 1, 1))
    gains = simplified_gains(1, L, beta)
    G = H * np.sqrt(gains)[None, :, None, :]
    desired = np.mean(np.abs(G[:, 0]) ** 2)
    contamination = np.mean(np.abs(G[:, 1:].sum(axis=1)) ** 2)
    assert contamination / desired == pytest.approx(beta * (L - 1), rel=0.02)


def test_multicell_error_variance():
    L, beta, pp, M, K = 7, 0.32, 2.0, 1, 2
    n = 100_000
    rng = stream(11)
    gains = simplified_gains(K, L, beta)
    H = complex_normal(rng, (n, L, M, K))
    W = complex_normal(rng, (n, M, K))
    G = H * np.sqrt(gains)[None, :, None, :]
    s = gains.sum(axis=0) + 1 / pp
    g_hat = (G.sum(axis=1) + W / np.sqrt(pp)) * (gains[0] / s)
    errs = (g_hat - G[:, 0])[:, 0, :]
    mc = assemble_multicell(H[0], gains)
    expected = multicell_mmse_estimate(mc, W[0], pp).error_vars
    assert np.allclose(np.mean(np.abs(errs) ** 2, axis=0), expected, rtol=0.02)

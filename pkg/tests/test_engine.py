import math

import numpy as np
import pytest

from spikecopula._kernels import fpt_block
from spikecopula.engine import (NotPositiveSemiDefinite, RngStream, check_correlation_matrix,
                                cholesky, correlated_increments, euler_step, ou_mean)


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_2x2_closed_form():
    L = cholesky([[1, 0.91], [0.91, 1]])
    expected = np.array([[1, 0], [0.91, math.sqrt(1 - 0.91**2)]])
    np.testing.assert_allclose(L, expected, atol=1e-15)


def test_cholesky_rejects_out_of_range():
    with pytest.raises(NotPositiveSemiDefinite):
        cholesky([[1, 1.5], [1.5, 1]])


def test_cholesky_accepts_zero_pivot():
    c = np.ones((3, 3))
    L = cholesky(c)
    np.testing.assert_allclose(L @ L.T, c, atol=1e-10)


def test_cholesky_rejects_inconsistent_3x3():
    # pairwise fine, jointly impossible
    c = np.array([[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]])
    with pytest.raises(NotPositiveSemiDefinite):
        cholesky(c)


@pytest.mark.parametrize("seed", range(20))
def test_cholesky_reconstructs_random_correlations(seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal((3, 5))
    cov = a @ a.T
    d = np.sqrt(np.diag(cov))
    c = cov / np.outer(d, d)
    np.fill_diagonal(c, 1.0)
    c = (c + c.T) / 2
    L = cholesky(c)
    assert np.allclose(np.triu(L, 1), 0)
    np.testing.assert_allclose(L @ L.T, c, atol=1e-10)


def test_check_correlation_matrix_reports():
    assert check_correlation_matrix(np.eye(2)) == []
    assert check_correlation_matrix([[1, 1.2], [1.2, 1]])
    assert any("symmetric" in p for p in check_correlation_matrix([[1, 0.2], [0.3, 1]]))
    assert any("diagonal" in p for p in check_correlation_matrix([[2, 0], [0, 1]]))


def test_rng_stream_reproducible_and_independent():
    a = RngStream(7, 3).standard_normal(100)
    b = RngStream(7, 3).standard_normal(100)
    c = RngStream(7, 4).standard_normal(100)
    d = RngStream(8, 3).standard_normal(100)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_block_draws_match_single_draws():
    L = cholesky([[1, 0.3], [0.3, 1]])
    s1, s2 = RngStream(1, 0), RngStream(1, 0)
    block = correlated_increments(L, 0.01, s1, 5)
    singles = np.array([correlated_increments(L, 0.01, s2) for _ in range(5)])
    # same normals; only matmul rounding may differ
    np.testing.assert_allclose(block, singles, rtol=0, atol=1e-15)
    z1 = RngStream(1, 0).standard_normal((5, 2))
    z2 = np.array([RngStream(1, 0).generator.standard_normal(10)[2 * k:2 * k + 2] for k in range(5)])
    np.testing.assert_array_equal(z1, z2)


def test_identity_increments_uncorrelated():
    dw = correlated_increments(np.eye(3), 0.01, RngStream(0), 100_000)
    cov = np.cov(dw.T)
    se = 0.01 / math.sqrt(100_000)  # sd of a product of two independent N(0, dt)
    off = cov[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off) < 3 * se * 1.0 + 1e-12)


def test_correlated_increment_covariance():
    L = cholesky([[1, 0.91], [0.91, 1]])
    dw = correlated_increments(L, 0.01, RngStream(1), 100_000)
    cov = np.mean(dw[:, 0] * dw[:, 1])
    assert abs(cov - 0.0091) / 0.0091 < 0.05


def test_negative_correlation_sign():
    L = cholesky([[1, -0.91], [-0.91, 1]])
    dw = correlated_increments(L, 0.01, RngStream(2), 100_000)
    r = np.corrcoef(dw.T)[0, 1]
    assert abs(r + 0.91) / 0.91 < 0.05


def test_covariance_consistency_1e6():
    c = np.array([[1, 0.5, -0.3], [0.5, 1, 0.2], [-0.3, 0.2, 1]])
    dt = 0.01
    n = 1_000_000
    dw = correlated_increments(cholesky(c), dt, RngStream(3), n)
    emp = dw.T @ dw / n
    # se of mean of products: sqrt((1 + c_ij^2) / n) * dt for Gaussian pairs
    se = np.sqrt((1 + c**2) / n) * dt
    assert np.all(np.abs(emp - c * dt) < 3 * se)


def test_euler_step_arithmetic():
    out = euler_step([0.0], [1.2], [10.0], [math.sqrt(0.3)], [0.0], 0.01)
    assert out[0] == pytest.approx(0.012, abs=1e-15)


def test_euler_step_fixed_point():
    out = euler_step([12.0], [1.2], [10.0], [0.0], [0.0], 0.01)
    assert out[0] == pytest.approx(12.0, abs=1e-12)


def test_euler_zero_noise_tracks_ou_mean():
    dt, mu, tau = 0.01, 1.2, 10.0
    x = np.zeros(1)
    steps = int(100 / dt)
    err = 0.0
    for k in range(1, steps + 1):
        x = euler_step(x, [mu], [tau], [0.0], [0.0], dt)
        err = max(err, abs(x[0] - ou_mean(k * dt, mu, tau)))
    assert err < 10 * dt * mu


def test_kernel_matches_euler_step_bitwise():
    # with a threshold out of reach the kernel is pure Euler stepping
    mu = np.array([1.2, 1.1])
    tau = np.array([10.0, 8.0])
    sigma = np.sqrt(np.array([0.3, 0.2]))
    theta = np.array([1e9, 1e9])
    L = cholesky([[1, 0.4], [0.4, 1]])
    dw = correlated_increments(L, 0.01, RngStream(9), 500)
    x = np.zeros(2)
    alive = np.ones(2, dtype=np.bool_)
    times = np.full(2, np.nan)
    fpt_block(x, alive, times, dw, mu, tau, sigma, theta, np.zeros((2, 2)), 0.01, 0, 0.0)
    ref = np.zeros(2)
    for row in dw:
        ref = euler_step(ref, mu, tau, sigma, row, 0.01)
    np.testing.assert_array_equal(x, ref)

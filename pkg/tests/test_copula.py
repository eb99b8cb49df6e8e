import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import brute_concordance, brute_tau
from spikecopula.copula import (DegenerateMargin, EmptyInput, concordance_counts, ecdf,
                                empirical_copula, kendall_tau, pearson_r, pseudo_observations,
                                read_summaries, spearman_rho, summarize, write_summaries)


def test_ecdf_counts():
    F = ecdf([1, 2, 3])
    assert F(2) == pytest.approx(2 / 3)
    assert F(0) == 0 and F(3) == 1 and F(10) == 1
    assert ecdf([1, 1, 2])(1) == pytest.approx(2 / 3)
    with pytest.raises(EmptyInput):
        ecdf([])


def test_pseudo_observations_example():
    p = pseudo_observations([(10, 100), (20, 50), (30, 70)])
    np.testing.assert_allclose(p.points, [[1 / 3, 1], [2 / 3, 1 / 3], [1, 2 / 3]])


def test_pseudo_observations_plus_one():
    p = pseudo_observations([(10, 100), (20, 50), (30, 70)], plus_one=True)
    assert p.u.max() == 0.75


def test_pseudo_observations_need_two_points():
    with pytest.raises(EmptyInput):
        pseudo_observations([(1, 2)])


def test_kendall_examples():
    assert kendall_tau([(1, 1), (2, 2), (3, 3)])[0] == 1
    assert kendall_tau([(1, 3), (2, 2), (3, 1)])[0] == -1
    assert concordance_counts([1, 2, 3], [2, 1, 3]) == (2, 1)
    assert kendall_tau([(1, 2), (2, 1), (3, 3)])[0] == pytest.approx(1 / 3)


def test_kendall_oracle_with_ties():
    r = np.random.default_rng(0)
    for _ in range(200):
        n = int(r.integers(2, 60))
        x = r.integers(0, 5, n).astype(float)
        y = r.integers(0, 5, n).astype(float)
        assert concordance_counts(x, y) == brute_concordance(x, y)


def test_kendall_matches_scipy_tau_a_without_ties():
    r = np.random.default_rng(1)
    x, y = r.standard_normal(300), r.standard_normal(300)
    tau, p = kendall_tau(np.column_stack([x, y]))
    ref = stats.kendalltau(x, y)
    assert tau == pytest.approx(ref.statistic, abs=1e-12)
    assert p == pytest.approx(ref.pvalue, rel=0.05)


def test_spearman_examples():
    assert spearman_rho([(1, 2), (2, 1), (3, 3)]) == pytest.approx(0.5)
    x = np.arange(10.0)
    assert spearman_rho(np.column_stack([x, x])) == pytest.approx(1)
    assert spearman_rho(np.column_stack([x, -x])) == pytest.approx(-1)


def test_spearman_matches_scipy_with_ties():
    r = np.random.default_rng(2)
    x, y = r.integers(0, 7, 200), r.integers(0, 7, 200)
    assert spearman_rho(np.column_stack([x, y])) == pytest.approx(stats.spearmanr(x, y).statistic)


def test_pearson_examples():
    x = np.arange(10.0)
    assert pearson_r(np.column_stack([x, 2 * x + 1])) == pytest.approx(1)
    assert pearson_r(np.column_stack([x, -x])) == pytest.approx(-1)
    assert pearson_r([(0, 0), (1, 1), (2, 0)]) == pytest.approx(0, abs=1e-15)


def test_constant_margin_rejected():
    for f in (spearman_rho, pearson_r, kendall_tau):
        with pytest.raises(DegenerateMargin):
            f([(1, 1), (1, 2), (1, 3)])


def test_monotone_transform_invariance():
    r = np.random.default_rng(3)
    x = r.standard_normal(500)
    y = x + r.standard_normal(500)
    base = np.column_stack([x, y])
    p0 = pseudo_observations(base)
    for f in (np.exp, lambda a: 1000 * a, lambda a: a + 17.25):
        t = np.column_stack([f(x), y])
        p1 = pseudo_observations(t)
        np.testing.assert_array_equal(p0.points, p1.points)
        assert kendall_tau(t) == kendall_tau(base)
        assert spearman_rho(t) == spearman_rho(base)
    assert pearson_r(np.column_stack([np.exp(x), y])) != pytest.approx(pearson_r(base), abs=1e-3)


def test_copula_boundaries():
    r = np.random.default_rng(4)
    pobs = pseudo_observations(r.standard_normal((400, 2)))
    n = len(pobs)
    grid = np.linspace(0, 1, 41)
    assert np.all(empirical_copula(pobs, grid, 0.0) <= 1 / n)
    c1 = empirical_copula(pobs, 1.0, grid)
    assert np.all(c1 <= grid + 1e-12) and np.all(c1 >= grid - 1 / n - 1e-12)


def test_copula_comonotone_and_independent():
    r = np.random.default_rng(5)
    x = r.standard_normal(2000)
    pobs = pseudo_observations(np.column_stack([x, x]))
    g = np.linspace(0, 1, 51)
    U, V = np.meshgrid(g, g)
    assert np.max(np.abs(empirical_copula(pobs, U, V) - np.minimum(U, V))) <= 1 / 2000
    pobs = pseudo_observations(r.standard_normal((20000, 2)))
    assert np.max(np.abs(empirical_copula(pobs, U, V) - U * V)) <= 3 / math.sqrt(20000)


def test_summarize_and_roundtrip(tmp_path):
    r = np.random.default_rng(6)
    x = r.standard_normal(50)
    s = summarize(np.column_stack([x, x + r.standard_normal(50)]), "X")
    assert s.label == "X" and s.n == 50 and s.significant and not s.low_confidence
    small = summarize([(1, 2), (2, 1), (3, 3)], "small")
    assert small.low_confidence
    path = write_summaries([s, small], tmp_path / "s.csv")
    back = read_summaries(path)
    assert [b.label for b in back] == ["X", "small"]
    assert back[0].kendall_tau == pytest.approx(s.kendall_tau, abs=5e-5)


def test_independent_summary_near_zero():
    r = np.random.default_rng(7)
    s = summarize(r.standard_normal((10_000, 2)))
    for v in (s.pearson_r, s.kendall_tau, s.spearman_rho):
        assert abs(v) < 0.03
    assert s.tau_p_value > 0.05


pairs_strategy = st.lists(
    st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=2, max_size=40)


@settings(max_examples=200, deadline=None)
@given(pairs_strategy)
def test_kendall_property_matches_brute_force(pairs):
    a = np.array(pairs, dtype=float)
    assume(np.ptp(a[:, 0]) > 0 and np.ptp(a[:, 1]) > 0)
    tau, _ = kendall_tau(a)
    assert tau == brute_tau(a[:, 0], a[:, 1])
    assert -1 <= tau <= 1


@settings(max_examples=100, deadline=None)
@given(pairs_strategy)
def test_kendall_symmetric_in_arguments(pairs):
    a = np.array(pairs, dtype=float)
    assume(np.ptp(a[:, 0]) > 0 and np.ptp(a[:, 1]) > 0)
    assert kendall_tau(a)[0] == kendall_tau(a[:, ::-1])[0]
    assert kendall_tau(np.column_stack([a[:, 0], -a[:, 1]]))[0] == -kendall_tau(a)[0]

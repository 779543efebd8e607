import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lstmfolio import optimizer
from lstmfolio.analytics import CovarianceMatrix
from lstmfolio.errors import NumericError
from lstmfolio.optimizer import (
    FrontierResult,
    efficient_frontier,
    equal_weight,
    max_sharpe_portfolio,
    min_risk_portfolio,
    monte_carlo_frontier,
    portfolio_return,
    portfolio_variance,
    sample_weights,
    sharpe_ratio,
)

from oracles import min_variance_unconstrained, pareto_bruteforce, quadratic_form, variance_terms

GOLDEN_SEED_42 = [
    0.27033253718068123,
    0.15329439230229386,
    0.29989681525296086,
    0.24358136226992383,
    0.03289489299414017,
]


def random_psd(rng, n):
    a = rng.normal(size=(n, n)) * rng.uniform(0.05, 0.5)
    return a @ a.T + np.eye(n) * 1e-4


def _frontier(vol, ret, rf=0.01):
    vol = np.asarray(vol, dtype=float)
    ret = np.asarray(ret, dtype=float)
    m = vol.shape[0]
    w = np.full((m, 1), 1.0)
    with np.errstate(divide="ignore"):
        sharpe = (ret - rf) / vol
    return FrontierResult(w, ret, vol, sharpe, 0, rf)


# ---------------------------------------------------------------------------
# return / variance / sharpe


def test_portfolio_return_examples():
    assert portfolio_return(equal_weight(5), [0.07] * 5) == pytest.approx(0.07, abs=1e-15)
    assert portfolio_return([1.0, 0.0], [0.3, -0.5]) == 0.3
    assert portfolio_return([0.25, 0.75], [0.1, 0.2]) == pytest.approx(0.175, abs=1e-15)
    with pytest.raises(ValueError):
        portfolio_return([0.5, 0.5], [0.1])


def test_portfolio_variance_examples():
    assert portfolio_variance(equal_weight(5), np.eye(5)) == pytest.approx(0.2, abs=1e-15)
    cov = random_psd(np.random.default_rng(3), 5)
    assert portfolio_variance([1, 0, 0, 0, 0], cov) == cov[0, 0]
    with pytest.raises(ValueError, match="symmetric"):
        portfolio_variance([0.5, 0.5], [[1.0, 0.2], [0.3, 1.0]])
    with pytest.raises(ValueError):
        portfolio_variance([0.5, 0.5], np.eye(3))


def test_fifteen_term_expansion():
    rng = np.random.default_rng(11)
    for _ in range(50):
        cov = random_psd(rng, 5)
        w = sample_weights(5, rng)
        terms = variance_terms(w, cov)
        assert len(terms) == 15
        assert portfolio_variance(w, cov) == pytest.approx(sum(terms), abs=1e-12)
        assert portfolio_variance(w, cov) == pytest.approx(quadratic_form(w, cov), abs=1e-12)


def test_sharpe_examples():
    assert sharpe_ratio(0.01, 0.2) == 0
    assert sharpe_ratio(0.3692, 0.2708, 0.01) == pytest.approx(1.32644, abs=1e-4)
    assert sharpe_ratio(0.01 + 2 * 0.1, 2 * 0.2) == pytest.approx(sharpe_ratio(0.11, 0.2), abs=1e-15)
    for vol in (0.0, -0.1):
        with pytest.raises(NumericError):
            sharpe_ratio(0.1, vol)


# ---------------------------------------------------------------------------
# weights


@pytest.mark.parametrize("n,expected", [(5, [0.2] * 5), (1, [1.0]), (4, [0.25] * 4)])
def test_equal_weight(n, expected):
    assert equal_weight(n).tolist() == expected


def test_equal_weight_zero():
    with pytest.raises(ValueError):
        equal_weight(0)


@given(st.integers(0, 2**32 - 1))
def test_single_asset_weight(seed):
    assert sample_weights(1, np.random.default_rng(seed)).tolist() == [1.0]


@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_sample_weights_on_simplex(n, seed):
    w = sample_weights(n, np.random.default_rng(seed))
    assert np.all(w >= 0)
    assert abs(w.sum() - 1) <= 1e-12


def test_sample_weights_golden():
    assert sample_weights(5, np.random.default_rng(42)).tolist() == GOLDEN_SEED_42


def test_sample_weights_redraws_zero():
    class Stub:
        def __init__(self):
            self.draws = [np.array([0.0, 0.5]), np.array([0.25, 0.75])]

        def random(self, n):
            return self.draws.pop(0)

    assert sample_weights(2, Stub()).tolist() == [0.25, 0.75]


# ---------------------------------------------------------------------------
# frontier sampling


def test_single_asset_universe():
    fr = monte_carlo_frontier([0.12], [[0.04]], samples=50, seed=1)
    assert np.all(fr.weights == 1.0)
    assert np.all(fr.annual_return == 0.12)
    assert np.all(fr.annual_vol == math.sqrt(0.04))


def test_sample_count():
    assert len(monte_carlo_frontier([0.1, 0.2], np.eye(2), samples=3)) == 3


def test_candidate_invariants():
    rng = np.random.default_rng(5)
    cov = random_psd(rng, 5)
    mu = rng.normal(0.1, 0.1, 5)
    fr = monte_carlo_frontier(mu, cov, samples=500, seed=9)
    assert np.all(fr.weights >= 0)
    np.testing.assert_allclose(fr.weights.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    quad = np.einsum("mi,ij,mj->m", fr.weights, cov, fr.weights)
    np.testing.assert_allclose(fr.annual_vol**2, quad, rtol=0, atol=1e-12)
    np.testing.assert_allclose(fr.annual_return, fr.weights @ mu, rtol=0, atol=1e-14)
    np.testing.assert_allclose(fr.sharpe, (fr.annual_return - 0.01) / fr.annual_vol, rtol=1e-14)
    for c in fr.candidates[:20]:
        assert c.annual_vol ** 2 == pytest.approx(portfolio_variance(c.weights, cov), abs=1e-12)


def test_candidate_i_uses_its_own_stream():
    fr = monte_carlo_frontier([0.1, 0.2, 0.3], np.eye(3), samples=10, seed=7)
    for i in (0, 4, 9):
        np.testing.assert_array_equal(fr.weights[i], sample_weights(3, np.random.default_rng([7, i])))


def test_worker_count_does_not_matter():
    rng = np.random.default_rng(2)
    cov, mu = random_psd(rng, 4), rng.normal(0.1, 0.1, 4)
    ref = monte_carlo_frontier(mu, cov, samples=1000, seed=3)
    for workers in (2, 3, 8):
        fr = monte_carlo_frontier(mu, cov, samples=1000, seed=3, workers=workers)
        for field in ("weights", "annual_return", "annual_vol", "sharpe"):
            np.testing.assert_array_equal(getattr(fr, field), getattr(ref, field))


def test_dimension_and_units_checks():
    with pytest.raises(ValueError):
        monte_carlo_frontier([0.1, 0.2], np.eye(3))
    with pytest.raises(ValueError):
        monte_carlo_frontier([0.1], [[1.0]], samples=0)
    daily = CovarianceMatrix(("a",), np.array([[1e-4]]))
    with pytest.raises(ValueError, match="annualised"):
        monte_carlo_frontier([0.1], daily)
    fr = monte_carlo_frontier([0.1], daily.annualize(), samples=2)
    assert fr.annual_vol[0] == pytest.approx(math.sqrt(0.025))


def test_two_asset_constrained_minimum():
    cov = np.diag([0.01, 0.04])
    fr = monte_carlo_frontier([0.1, 0.2], cov, samples=10_000, seed=0)
    best = min_risk_portfolio(fr)
    assert best.annual_vol >= math.sqrt(min_variance_unconstrained(cov)) - 1e-15
    assert abs(best.annual_vol - math.sqrt(0.008)) / math.sqrt(0.008) <= 0.02
    np.testing.assert_allclose(best.weights, [0.8, 0.2], atol=0.02)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_sampling_never_beats_global_minimum(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(5):
        cov = random_psd(rng, n)
        fr = monte_carlo_frontier(rng.normal(0.1, 0.1, n), cov, samples=2000, seed=int(rng.integers(1 << 30)))
        assert min_risk_portfolio(fr).annual_vol >= math.sqrt(min_variance_unconstrained(cov)) * (1 - 1e-12)


# ---------------------------------------------------------------------------
# selection


def test_min_risk_examples():
    assert min_risk_portfolio(_frontier([0.3, 0.2, 0.25], [0.1, 0.1, 0.1])).index == 1
    assert min_risk_portfolio(_frontier([0.3], [0.1])).index == 0
    assert min_risk_portfolio(_frontier([0.2, 0.1, 0.1], [0.1, 0.1, 0.2])).index == 1


def test_max_sharpe_examples():
    fr = _frontier([1.0, 1.0, 1.0], [1.01, 1.51, 0.71])
    assert max_sharpe_portfolio(fr).index == 1
    tied = _frontier([0.2, 0.4], [0.11, 0.21])
    assert max_sharpe_portfolio(tied).index == 0


def test_selection_needs_candidates_and_positive_vol():
    empty = _frontier([], [])
    for fn in (min_risk_portfolio, max_sharpe_portfolio, efficient_frontier):
        with pytest.raises(ValueError):
            fn(empty)
    with pytest.raises(NumericError):
        max_sharpe_portfolio(_frontier([0.0, 0.1], [0.1, 0.1]))


def test_selection_matches_full_scan():
    rng = np.random.default_rng(8)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        fr = monte_carlo_frontier(rng.normal(0.1, 0.1, n), random_psd(rng, n), samples=1000, seed=int(rng.integers(1000)))
        vols = [float(v) for v in fr.annual_vol]
        sharpes = [float(s) for s in fr.sharpe]
        assert min_risk_portfolio(fr).index == vols.index(min(vols))
        assert max_sharpe_portfolio(fr).index == sharpes.index(max(sharpes))


def test_sharpe_selection_invariant_to_monotone_transform():
    rng = np.random.default_rng(4)
    fr = monte_carlo_frontier(rng.normal(0.1, 0.1, 3), random_psd(rng, 3), samples=500, seed=2)
    moved = FrontierResult(fr.weights, fr.annual_return, fr.annual_vol, np.exp(3 * fr.sharpe) + 7, fr.seed, fr.risk_free)
    assert max_sharpe_portfolio(moved).index == max_sharpe_portfolio(fr).index


def test_shifted_returns_select_recomputed_argmax():
    rng = np.random.default_rng(6)
    fr = monte_carlo_frontier(rng.normal(0.1, 0.1, 4), random_psd(rng, 4), samples=300, seed=1)
    ret = fr.annual_return + 0.2
    moved = FrontierResult(fr.weights, ret, fr.annual_vol, (ret - 0.01) / fr.annual_vol, 0, 0.01)
    assert max_sharpe_portfolio(moved).index == int(np.argmax((ret - 0.01) / fr.annual_vol))


def test_frontier_examples():
    assert [c.index for c in efficient_frontier(_frontier([0.2, 0.3], [0.1, 0.05]))] == [0]
    assert [c.index for c in efficient_frontier(_frontier([0.2, 0.3], [0.1, 0.2]))] == [0, 1]


def test_frontier_duplicates_collapse():
    fr = _frontier([0.2, 0.2, 0.3, 0.2], [0.1, 0.1, 0.2, 0.05])
    assert [c.index for c in efficient_frontier(fr)] == [0, 2]


@st.composite
def point_clouds(draw):
    m = draw(st.integers(1, 60))
    grid = st.integers(1, 8)
    vol = draw(st.lists(grid, min_size=m, max_size=m))
    ret = draw(st.lists(grid, min_size=m, max_size=m))
    return np.array(vol) / 10.0, np.array(ret) / 10.0


@given(point_clouds())
def test_frontier_matches_pairwise_oracle_with_ties(cloud):
    vol, ret = cloud
    got = [c.index for c in efficient_frontier(_frontier(vol, ret))]
    assert got == pareto_bruteforce(vol.tolist(), ret.tolist())


def test_frontier_matches_pairwise_oracle_random_sets():
    rng = np.random.default_rng(12)
    for _ in range(3):
        fr = monte_carlo_frontier(rng.normal(0.1, 0.1, 5), random_psd(rng, 5), samples=1000, seed=int(rng.integers(1000)))
        got = [c.index for c in efficient_frontier(fr)]
        assert got == pareto_bruteforce(fr.annual_vol.tolist(), fr.annual_return.tolist())
        vols = [c.annual_vol for c in efficient_frontier(fr)]
        rets = [c.annual_return for c in efficient_frontier(fr)]
        assert vols == sorted(vols)
        assert all(b > a for a, b in zip(rets, rets[1:]))

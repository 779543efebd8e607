"""Portfolio evaluation, Monte Carlo frontier sampling and portfolio selection.

Candidate ``i`` of a frontier run draws its weights from its own generator,
seeded with ``(seed, i)``, so results do not depend on how sampling work is
split between threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analytics import CovarianceMatrix
from .errors import NumericError

DEFAULT_SAMPLES = 10_000
DEFAULT_RISK_FREE = 0.01
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PortfolioCandidate:
    weights: np.ndarray
    annual_return: float
    annual_vol: float
    sharpe: float
    index: int = -1  # sample index inside its FrontierResult, -1 if standalone

    def weight_map(self, tickers):
        return {t: float(w) for t, w in zip(tickers, self.weights)}


@dataclass(frozen=True, eq=False)
class FrontierResult:
    weights: np.ndarray  # (m, n)
    annual_return: np.ndarray
    annual_vol: np.ndarray
    sharpe: np.ndarray
    seed: int
    risk_free: float
    tickers: tuple = ()

    def __len__(self):
        return self.weights.shape[0]

    def candidate(self, i):
        return PortfolioCandidate(
            self.weights[i].copy(),
            float(self.annual_return[i]),
            float(self.annual_vol[i]),
            float(self.sharpe[i]),
            int(i),
        )

    @property
    def candidates(self):
        return [self.candidate(i) for i in range(len(self))]


def _as_matrix(cov):
    values = cov.values if isinstance(cov, CovarianceMatrix) else cov
    return np.atleast_2d(np.asarray(values, dtype=np.float64))


def check_weights(weights):
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] == 0:
        raise ValueError("weights must be a non-empty vector")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def portfolio_return(weights, expected):
    w = np.asarray(weights, dtype=np.float64)
    mu = np.asarray(expected, dtype=np.float64)
    if w.shape != mu.shape:
        raise ValueError(f"dimension mismatch: {w.shape} weights vs {mu.shape} returns")
    return float(np.dot(w, mu))


def portfolio_variance(weights, cov):
    """Own-variance terms plus twice every pairwise covariance term.

    ``cov`` must already be annualised.  For five assets this is the
    15-term sum (5 variances, 10 pairs).
    """
    w = np.asarray(weights, dtype=np.float64)
    c = _as_matrix(cov)
    n = w.shape[0]
    if c.shape != (n, n):
        raise ValueError(f"dimension mismatch: {n} weights vs {c.shape} covariance")
    scale = max(float(np.abs(c).max()), 1.0)
    if np.abs(c - c.T).max() > 1e-12 * scale:
        raise ValueError("covariance matrix is not symmetric")
    total = 0.0
    for i in range(n):
        total += w[i] * w[i] * c[i, i]
        for j in range(i + 1, n):
            total += 2.0 * w[i] * w[j] * c[i, j]
    return total


def sharpe_ratio(annual_return, annual_vol, risk_free=DEFAULT_RISK_FREE):
    if not annual_vol > 0:
        raise NumericError(f"volatility must be positive, got {annual_vol}")
    return (annual_return - risk_free) / annual_vol


def equal_weight(n):
    if n < 1:
        raise ValueError("need at least one asset")
    return np.full(n, 1.0 / n)


def sample_weights(n, rng):
    """``n`` uniforms on (0, 1), normalised to sum to one."""
    if n < 1:
        raise ValueError("need at least one asset")
    while True:
        u = rng.random(n)
        if np.all(u > 0):
            return u / u.sum()


def substream(seed, index):
    """Independent generator for sample ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


def evaluate(weights, expected, cov, risk_free=DEFAULT_RISK_FREE):
    w = check_weights(weights)
    ret = portfolio_return(w, expected)
    vol = float(np.sqrt(max(portfolio_variance(w, cov), 0.0)))
    return PortfolioCandidate(w, ret, vol, sharpe_ratio(ret, vol, risk_free))


def _draw(n, seed, indices):
    return np.stack([sample_weights(n, substream(seed, i)) for i in indices])


def monte_carlo_frontier(
    expected,
    cov,
    samples=DEFAULT_SAMPLES,
    risk_free=DEFAULT_RISK_FREE,
    seed=0,
    tickers=(),
    workers=1,
):
    """Evaluate ``samples`` random long-only portfolios.

    ``cov`` is the annualised covariance.  ``workers > 1`` spreads weight
    generation over threads; the result is identical for every worker count.
    """
    mu = np.asarray(expected, dtype=np.float64)
    c = np.ascontiguousarray(_as_matrix(cov))
    if isinstance(cov, CovarianceMatrix) and not cov.annualized:
        raise ValueError("pass an annualised covariance (CovarianceMatrix.annualize())")
    n = mu.shape[0]
    if c.shape != (n, n):
        raise ValueError(f"dimension mismatch: {n} returns vs {c.shape} covariance")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if workers <= 1 or samples < 2 * workers:
        weights = _draw(n, seed, range(samples))
    else:
        bounds = np.linspace(0, samples, workers + 1).astype(int)
        chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            weights = np.concatenate(list(pool.map(lambda r: _draw(n, seed, r), chunks)))
    ret, vol, sharpe = kernels.frontier_stats(weights, mu, c, float(risk_free))
    return FrontierResult(weights, ret, vol, sharpe, int(seed), float(risk_free), tuple(tickers))


def min_risk_portfolio(fr):
    """Lowest-volatility candidate; ties go to the lower sample index."""
    if len(fr) == 0:
        raise ValueError("empty frontier")
    return fr.candidate(int(np.argmin(fr.annual_vol)))


def max_sharpe_portfolio(fr):
    if len(fr) == 0:
        raise ValueError("empty frontier")
    if np.any(fr.annual_vol <= 0):
        raise NumericError("Sharpe selection needs strictly positive volatilities")
    return fr.candidate(int(np.argmax(fr.sharpe)))


def efficient_frontier(fr):
    """Non-dominated candidates (low vol, high return), by ascending volatility.

    Exact duplicates of a kept point are dropped, keeping the lowest index,
    so returns strictly increase along the list.
    """
    if len(fr) == 0:
        raise ValueError("empty frontier")
    keep = kernels.pareto_scan(np.ascontiguousarray(fr.annual_vol), np.ascontiguousarray(fr.annual_return))
    return [fr.candidate(int(i)) for i in keep]

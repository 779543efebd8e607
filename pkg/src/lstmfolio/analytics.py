"""Per-stock return statistics and cross-stock covariance/correlation.

Annualisation uses a fixed 250-day trading year: volatilities scale by
``sqrt(250)``, mean returns and covariances by 250.  All dispersion
estimates use the sample ``(m - 1)`` denominator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError

TRADING_DAYS = 250
ANNUAL_RETURN_METHODS = ("yearly", "global")


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    ticker: str
    dates: np.ndarray  # date of the later close of each pair
    values: np.ndarray
    kind: str  # "simple" or "log"

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class ReturnMatrix:
    tickers: tuple
    dates: np.ndarray
    values: np.ndarray  # (n, T - 1)
    kind: str = "simple"

    def row(self, i):
        return ReturnSeries(self.tickers[i], self.dates, self.values[i], self.kind)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    tickers: tuple
    values: np.ndarray  # (n, n)
    annualized: bool = False

    def annualize(self):
        """Scale daily covariance to yearly units (x 250)."""
        if self.annualized:
            return self
        return CovarianceMatrix(self.tickers, self.values * TRADING_DAYS, annualized=True)


@dataclass(frozen=True)
class StockStats:
    ticker: str
    daily_vol: float
    annual_vol: float
    annual_return: float


def _closes(prices):
    closes = np.asarray(prices.closes, dtype=np.float64)
    if closes.shape[0] < 2:
        raise DataError(f"{prices.ticker}: need at least 2 closes, got {closes.shape[0]}")
    return closes


def daily_returns(prices):
    """Simple daily returns ``close[t+1] / close[t] - 1``, stamped with the later date."""
    closes = _closes(prices)
    values = closes[1:] / closes[:-1] - 1.0
    return ReturnSeries(prices.ticker, prices.dates[1:], values, "simple")


def log_returns(prices):
    closes = _closes(prices)
    values = np.log(closes[1:] / closes[:-1])
    return ReturnSeries(prices.ticker, prices.dates[1:], values, "log")


def _values(returns):
    if isinstance(returns, ReturnSeries):
        return returns.values
    return np.asarray(returns, dtype=np.float64)


def daily_volatility(returns):
    x = _values(returns)
    if x.shape[0] < 2:
        raise DataError(f"need at least 2 return observations, got {x.shape[0]}")
    return float(np.std(x, ddof=1))


def annualize_volatility(daily_vol):
    if daily_vol < 0:
        raise ValueError(f"daily volatility must be non-negative, got {daily_vol}")
    return float(daily_vol) * float(np.sqrt(TRADING_DAYS))


def annual_return(returns, method="yearly"):
    """Annualised mean return.

    ``"yearly"``: mean daily return within each calendar year times 250,
    averaged over years with equal weight.  ``"global"``: mean daily return
    over the whole span times 250.
    """
    if method not in ANNUAL_RETURN_METHODS:
        raise ValueError(f"method must be one of {ANNUAL_RETURN_METHODS}")
    x = returns.values
    if x.shape[0] < 2:
        raise DataError(f"need at least 2 return observations, got {x.shape[0]}")
    if method == "global":
        return float(x.mean() * TRADING_DAYS)
    years = returns.dates.astype("datetime64[Y]")
    _, inverse = np.unique(years, return_inverse=True)
    sums = np.bincount(inverse, weights=x)
    counts = np.bincount(inverse)
    return float(np.mean(sums / counts) * TRADING_DAYS)


def return_matrix(panel, kind="simple"):
    """Daily returns of every row of an aligned panel."""
    if kind not in ("simple", "log"):
        raise ValueError("kind must be 'simple' or 'log'")
    closes = np.asarray(panel.closes, dtype=np.float64)
    if closes.shape[1] < 2:
        raise DataError("panel needs at least 2 dates")
    ratio = closes[:, 1:] / closes[:, :-1]
    values = np.log(ratio) if kind == "log" else ratio - 1.0
    return ReturnMatrix(tuple(panel.tickers), panel.dates[1:], values, kind)


def covariance_matrix(rm):
    x = np.atleast_2d(np.asarray(rm.values, dtype=np.float64))
    m = x.shape[1]
    if m < 2:
        raise DataError(f"need at least 2 return observations, got {m}")
    xc = x - x.mean(axis=1, keepdims=True)
    full = (xc @ xc.T) / (m - 1)
    # mirror the upper triangle so symmetry is exact
    upper = np.triu(full)
    values = upper + np.triu(full, 1).T
    return CovarianceMatrix(tuple(rm.tickers), values)


def correlation_matrix(rm):
    cov = covariance_matrix(rm).values
    sd = np.sqrt(np.diag(cov))
    if np.any(sd == 0):
        bad = [t for t, s in zip(rm.tickers, sd) if s == 0]
        raise NumericError(f"zero-variance returns for {bad}")
    corr = cov / np.outer(sd, sd)
    np.clip(corr, -1.0, 1.0, out=corr)
    np.fill_diagonal(corr, 1.0)
    return CovarianceMatrix(tuple(rm.tickers), corr)


def stock_stats(rm, method="yearly"):
    out = []
    for i, ticker in enumerate(rm.tickers):
        row = rm.row(i)
        dv = daily_volatility(row)
        out.append(StockStats(ticker, dv, annualize_volatility(dv), annual_return(row, method)))
    return out


def expected_returns(rm, method="yearly"):
    return np.array([annual_return(rm.row(i), method) for i in range(len(rm.tickers))])

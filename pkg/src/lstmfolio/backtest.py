"""Buy-and-hold backtest of a weight vector over a hold-out window.

Capital is split by weight at the entry prices (fractional shares, no fees)
and the holdings are valued at the horizon under actual and, optionally,
predicted prices.  Arithmetic is done at full precision; rounding happens
only when a report is rendered as text.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

from .errors import DataError
from .optimizer import WEIGHT_SUM_TOL


@dataclass(frozen=True)
class Holding:
    ticker: str
    amount_invested: float
    entry_price: float
    shares: float


@dataclass(frozen=True)
class ReportRow:
    ticker: str
    amount_invested: float
    entry_price: float
    shares: float
    actual_price: float
    actual_value: float
    predicted_price: float | None = None
    predicted_value: float | None = None


@dataclass(frozen=True)
class BacktestReport:
    rows: tuple
    total_invested: float
    total_actual: float
    roi_actual_pct: float
    total_predicted: float | None = None
    roi_predicted_pct: float | None = None
    portfolio: str = ""

    def to_dict(self):
        return {
            "portfolio": self.portfolio,
            "holdings": [asdict(r) for r in self.rows],
            "total_invested": self.total_invested,
            "total_actual": self.total_actual,
            "total_predicted": self.total_predicted,
            "roi_actual_pct": self.roi_actual_pct,
            "roi_predicted_pct": self.roi_predicted_pct,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            rows = tuple(ReportRow(**r) for r in d["holdings"])
            return cls(
                rows,
                d["total_invested"],
                d["total_actual"],
                d["roi_actual_pct"],
                d.get("total_predicted"),
                d.get("roi_predicted_pct"),
                d.get("portfolio", ""),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed backtest report: {exc}") from exc


def _price(prices, ticker, what):
    try:
        p = float(prices[ticker])
    except KeyError:
        raise DataError(f"no {what} price for {ticker}") from None
    if not (math.isfinite(p) and p > 0):
        raise DataError(f"{what} price for {ticker} must be positive, got {p}")
    return p


def allocate(capital, weights, entry_prices):
    """Split ``capital`` by ``weights`` (ticker -> fraction) at the entry prices."""
    if not capital > 0:
        raise DataError(f"capital must be positive, got {capital}")
    weights = dict(weights)
    if any(w < 0 for w in weights.values()):
        raise DataError("weights must be non-negative")
    total_w = math.fsum(weights.values())
    if abs(total_w - 1.0) > WEIGHT_SUM_TOL:
        raise DataError(f"weights must sum to 1, got {total_w!r}")
    holdings = []
    for ticker, w in weights.items():
        price = _price(entry_prices, ticker, "entry")
        amount = capital * w
        holdings.append(Holding(ticker, amount, price, amount / price))
    return holdings


def value(holdings, prices):
    return math.fsum(h.shares * _price(prices, h.ticker, "horizon") for h in holdings)


def roi(invested, final):
    """Return on investment in percent."""
    if not invested > 0:
        raise DataError(f"invested amount must be positive, got {invested}")
    return (final - invested) / invested * 100.0


def run_backtest(capital, weights, entry_prices, actual_prices, predicted_prices=None, portfolio=""):
    holdings = allocate(capital, weights, entry_prices)
    return report_from_holdings(holdings, actual_prices, predicted_prices, portfolio=portfolio)


def report_from_holdings(holdings, actual_prices, predicted_prices=None, invested=None, portfolio=""):
    """Value existing holdings at the horizon.

    ``invested`` is the base for ROI and defaults to the sum of the amounts.
    """
    rows = []
    for h in holdings:
        ap = _price(actual_prices, h.ticker, "actual horizon")
        pp = pv = None
        if predicted_prices is not None:
            pp = _price(predicted_prices, h.ticker, "predicted horizon")
            pv = h.shares * pp
        rows.append(ReportRow(h.ticker, h.amount_invested, h.entry_price, h.shares, ap, h.shares * ap, pp, pv))
    if invested is None:
        invested = math.fsum(h.amount_invested for h in holdings)
    total_actual = math.fsum(r.actual_value for r in rows)
    total_pred = roi_pred = None
    if predicted_prices is not None:
        total_pred = math.fsum(r.predicted_value for r in rows)
        roi_pred = roi(invested, total_pred)
    return BacktestReport(
        tuple(rows), invested, total_actual, roi(invested, total_actual), total_pred, roi_pred, portfolio
    )


# ---------------------------------------------------------------------------
# Rendering and summaries
# ---------------------------------------------------------------------------


def _fmt_int(x):
    return "" if x is None else f"{x:.0f}"


def report_table(report):
    """Plain-text table: amount, entry price, shares, then actual and predicted price/value."""
    header = ["Stock", "Amt Invstd", "Entry Price", "No of Stocks", "Act Price", "Act Val", "Pred Price", "Pred Val"]
    body = [
        [
            r.ticker,
            _fmt_int(r.amount_invested),
            _fmt_int(r.entry_price),
            f"{r.shares:.2f}",
            _fmt_int(r.actual_price),
            _fmt_int(r.actual_value),
            _fmt_int(r.predicted_price),
            _fmt_int(r.predicted_value),
        ]
        for r in report.rows
    ]
    body.append(["Total", _fmt_int(report.total_invested), "", "", "", _fmt_int(report.total_actual), "", _fmt_int(report.total_predicted)])
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(row, widths))) for row in [header, *body]]
    roi_line = f"ROI (%)  Actual: {report.roi_actual_pct:.2f}"
    if report.roi_predicted_pct is not None:
        roi_line += f"  Predicted: {report.roi_predicted_pct:.2f}"
    title = [report.portfolio] if report.portfolio else []
    return "\n".join([*title, *lines, roi_line]) + "\n"


@dataclass(frozen=True)
class SummaryRow:
    portfolio: str
    actual_return_pct: float
    predicted_return_pct: float | None


def summary(reports):
    """One row per report, in input order."""
    reports = list(reports)
    if not reports:
        raise DataError("summary needs at least one report")
    return [SummaryRow(r.portfolio, r.roi_actual_pct, r.roi_predicted_pct) for r in reports]


def summary_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["portfolio", "actual_return_pct", "predicted_return_pct"])
    for r in rows:
        pred = "" if r.predicted_return_pct is None else f"{r.predicted_return_pct:.2f}"
        writer.writerow([r.portfolio, f"{r.actual_return_pct:.2f}", pred])
    return buf.getvalue()

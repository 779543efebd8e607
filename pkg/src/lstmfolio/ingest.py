"""Loading, validating and aligning daily close prices.

Prices travel as a long-format CSV (``date,ticker,close``).  The same format
is used for local input and as the cache written by :func:`fetch_remote`, so
everything downstream of ingestion runs offline.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import math
import threading
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .errors import (
    AlignmentError,
    CsvFormatError,
    DataError,
    EmptyResponseError,
    FetchNetworkError,
    UnknownTickerError,
)

log = logging.getLogger(__name__)

CSV_HEADER = "date,ticker,close"
MAX_FILL_GAP_DAYS = 5
YAHOO_CHART_URL = "https://query1.finance.yahoo.com/v8/finance/chart/{ticker}"


@dataclass(frozen=True)
class PriceBar:
    date: dt.date
    close: float

    def __post_init__(self):
        if not isinstance(self.date, dt.date):
            raise DataError(f"bar date must be a date, got {self.date!r}")
        if not (math.isfinite(self.close) and self.close > 0):
            raise DataError(f"close must be a positive finite number, got {self.close!r}")


class PriceSeries:
    """Dated close prices of one instrument, strictly increasing in date.

    ``dates`` is a ``datetime64[D]`` array and ``closes`` a float64 array of the
    same length.  Both are stored read-only.
    """

    __slots__ = ("ticker", "dates", "closes")

    def __init__(self, ticker, dates, closes):
        dates = np.array(dates, dtype="datetime64[D]")
        closes = np.array(closes, dtype=np.float64)
        if not ticker or not isinstance(ticker, str):
            raise DataError("ticker must be a non-empty string")
        if dates.ndim != 1 or dates.shape != closes.shape:
            raise DataError(f"{ticker}: dates and closes must be 1-d and equally long")
        if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise DataError(f"{ticker}: dates must be strictly increasing without duplicates")
        if not np.all(np.isfinite(closes) & (closes > 0)):
            raise DataError(f"{ticker}: closes must be positive and finite")
        dates.setflags(write=False)
        closes.setflags(write=False)
        self.ticker = ticker
        self.dates = dates
        self.closes = closes

    @classmethod
    def from_bars(cls, ticker, bars):
        bars = sorted(bars, key=lambda b: b.date)
        return cls(ticker, [b.date for b in bars], [b.close for b in bars])

    @property
    def bars(self):
        return [PriceBar(d.item(), float(c)) for d, c in zip(self.dates, self.closes)]

    def __len__(self):
        return self.closes.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.ticker == other.ticker
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.closes, other.closes)
        )

    def __repr__(self):
        if len(self) == 0:
            return f"PriceSeries({self.ticker!r}, empty)"
        return f"PriceSeries({self.ticker!r}, {len(self)} bars, {self.dates[0]}..{self.dates[-1]})"

    def between(self, start=None, end=None):
        """Sub-series with ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return PriceSeries(self.ticker, self.dates[mask], self.closes[mask])


@dataclass(frozen=True, eq=False)
class AlignedPanel:
    tickers: tuple
    dates: np.ndarray
    closes: np.ndarray  # (n, T)

    @property
    def n(self):
        return len(self.tickers)

    def series(self, i):
        return PriceSeries(self.tickers[i], self.dates, self.closes[i])


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def format_close(value):
    """Render a close with at most six fractional digits and no trailing zeros."""
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"


def load_csv(path, on_error="raise"):
    """Parse a long-format price CSV into one :class:`PriceSeries` per ticker.

    Tickers come back in order of first appearance, bars sorted by date.
    Bad rows (unparsable date, unparsable or non-positive close, duplicate
    ``(ticker, date)``) are collected with their line numbers.  With
    ``on_error="raise"`` any bad row raises :class:`CsvFormatError` listing
    all of them; ``on_error="skip"`` logs each one and drops it.
    """
    if on_error not in ("raise", "skip"):
        raise ValueError("on_error must be 'raise' or 'skip'")
    path = Path(path)
    if not path.is_file():
        raise CsvFormatError("file not found", path=path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        got = lines[0] if lines else "<empty file>"
        raise CsvFormatError(f"header must be exactly {CSV_HEADER!r}, got {got!r}", path=path, line=1)

    rows: dict[str, dict] = {}
    problems = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != 3:
            problems.append((lineno, f"expected 3 fields, got {len(parts)}"))
            continue
        date_s, ticker, close_s = (p.strip() for p in parts)
        try:
            day = dt.date.fromisoformat(date_s)
        except ValueError:
            problems.append((lineno, f"unparsable date {date_s!r}"))
            continue
        if not ticker:
            problems.append((lineno, "empty ticker"))
            continue
        try:
            close = float(close_s)
        except ValueError:
            problems.append((lineno, f"unparsable close {close_s!r}"))
            continue
        if not math.isfinite(close) or close <= 0:
            problems.append((lineno, f"close must be positive, got {close_s!r}"))
            continue
        per_ticker = rows.setdefault(ticker, {})
        if day in per_ticker:
            problems.append((lineno, f"duplicate date {date_s} for {ticker}"))
            continue
        per_ticker[day] = close

    if problems:
        if on_error == "raise":
            first = problems[0][0]
            detail = "; ".join(f"line {ln}: {msg}" for ln, msg in problems)
            err = CsvFormatError(detail, path=path, line=first)
            err.diagnostics = problems
            raise err
        for ln, msg in problems:
            log.warning("%s:%d: %s (row skipped)", path, ln, msg)

    out = []
    for ticker, by_date in rows.items():
        days = sorted(by_date)
        out.append(PriceSeries(ticker, days, [by_date[d] for d in days]))
    return out


def csv_text(series):
    """Serialise series to the canonical CSV text (ticker order kept, dates ascending)."""
    lines = [CSV_HEADER]
    for s in series:
        for d, c in zip(s.dates, s.closes):
            lines.append(f"{d},{s.ticker},{format_close(float(c))}")
    return "\n".join(lines) + "\n"


def write_csv(series, path):
    atomic_write_text(path, csv_text(series))


# ---------------------------------------------------------------------------
# Remote fetch
# ---------------------------------------------------------------------------

_ticker_locks: dict[str, threading.Lock] = {}
_locks_guard = threading.Lock()


def _lock_for(ticker):
    with _locks_guard:
        return _ticker_locks.setdefault(ticker, threading.Lock())


def _urllib_transport(url, params, timeout=30.0):
    query = urllib.parse.urlencode(params)
    req = urllib.request.Request(f"{url}?{query}", headers={"User-Agent": "Mozilla/5.0"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as exc:
        if exc.code == 404:
            # Yahoo answers unknown symbols with 404 and a JSON error body
            return exc.read()
        raise FetchNetworkError(f"HTTP {exc.code} from {url}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise FetchNetworkError(f"request to {url} failed: {exc}") from exc


def parse_chart_response(ticker, body, start, end):
    """Turn a Yahoo chart-API JSON body into a :class:`PriceSeries`.

    Timestamps are shifted by the exchange's ``gmtoffset`` before taking the
    calendar date.  Null closes are dropped.  Closes are rounded to the six
    decimals the CSV cache keeps.
    """
    try:
        payload = json.loads(body)
        chart = payload["chart"]
    except (ValueError, KeyError, TypeError) as exc:
        raise EmptyResponseError(f"{ticker}: response is not a chart payload") from exc
    if chart.get("error"):
        err = chart["error"]
        raise UnknownTickerError(f"{ticker}: {err.get('code')}: {err.get('description')}")
    results = chart.get("result") or []
    if not results:
        raise UnknownTickerError(f"{ticker}: no result in response")
    result = results[0]
    stamps = result.get("timestamp") or []
    quotes = (result.get("indicators") or {}).get("quote") or [{}]
    closes = quotes[0].get("close") or []
    offset = int((result.get("meta") or {}).get("gmtoffset") or 0)
    lo, hi = np.datetime64(start, "D"), np.datetime64(end, "D")
    by_date = {}
    for ts, close in zip(stamps, closes):
        if close is None or not math.isfinite(close) or close <= 0:
            continue
        day = np.datetime64(dt.datetime.fromtimestamp(ts + offset, dt.timezone.utc).date(), "D")
        if lo <= day <= hi:
            by_date[day] = round(float(close), 6)
    if not by_date:
        raise EmptyResponseError(f"{ticker}: no prices between {start} and {end}")
    days = sorted(by_date)
    return PriceSeries(ticker, days, [by_date[d] for d in days])


def cache_path(cache_dir, ticker, start, end):
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in ticker)
    return Path(cache_dir) / f"{safe}__{start}__{end}.csv"


def fetch_remote(ticker, start, end, cache_dir, transport=None, refresh=False):
    """Daily closes for ``ticker`` over ``[start, end]``, cached as CSV.

    A cached file short-circuits the network entirely.  ``transport`` is any
    callable ``(url, params) -> bytes``; the default uses :mod:`urllib`.
    Raises :class:`FetchNetworkError`, :class:`UnknownTickerError` or
    :class:`EmptyResponseError`.
    """
    start = dt.date.fromisoformat(str(start))
    end = dt.date.fromisoformat(str(end))
    if start >= end:
        raise DataError(f"start ({start}) must precede end ({end})")
    target = cache_path(cache_dir, ticker, start, end)
    with _lock_for(ticker):
        if target.is_file() and not refresh:
            (series,) = load_csv(target)
            return series
        transport = transport or _urllib_transport
        epoch = dt.datetime(1970, 1, 1, tzinfo=dt.timezone.utc)
        lo = dt.datetime.combine(start, dt.time(), dt.timezone.utc)
        hi = dt.datetime.combine(end + dt.timedelta(days=1), dt.time(), dt.timezone.utc)
        params = {
            "period1": int((lo - epoch).total_seconds()),
            "period2": int((hi - epoch).total_seconds()),
            "interval": "1d",
        }
        body = transport(YAHOO_CHART_URL.format(ticker=urllib.parse.quote(ticker)), params)
        series = parse_chart_response(ticker, body, start, end)
        write_csv([series], target)
        (series,) = load_csv(target)
        return series


# ---------------------------------------------------------------------------
# Alignment
# ---------------------------------------------------------------------------


def align(series, max_gap_days=MAX_FILL_GAP_DAYS):
    """Put several series on one common date axis.

    Each series is forward-filled onto the union of all dates, but only at
    interior dates lying at most ``max_gap_days`` calendar days after its last
    real observation.  Dates still missing anywhere are then dropped.
    """
    series = list(series)
    if not series:
        raise AlignmentError("need at least one series")
    tickers = [s.ticker for s in series]
    if len(set(tickers)) != len(tickers):
        raise AlignmentError(f"duplicate tickers in {tickers}")
    axis = np.unique(np.concatenate([s.dates for s in series]))
    gap = np.timedelta64(max_gap_days, "D")
    filled = np.empty((len(series), axis.shape[0]))
    ok = np.ones(axis.shape[0], dtype=bool)
    for row, s in enumerate(series):
        if len(s) == 0:
            raise AlignmentError(f"{s.ticker}: empty series")
        pos = np.searchsorted(s.dates, axis, side="right") - 1
        safe = np.clip(pos, 0, None)
        valid = (pos >= 0) & (axis <= s.dates[-1]) & (axis - s.dates[safe] <= gap)
        ok &= valid
        filled[row] = s.closes[safe]
    if not ok.any():
        raise AlignmentError(f"date ranges of {tickers} do not intersect")
    dates = axis[ok]
    closes = np.ascontiguousarray(filled[:, ok])
    dates.setflags(write=False)
    closes.setflags(write=False)
    return AlignedPanel(tuple(tickers), dates, closes)

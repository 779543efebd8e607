"""Command-line pipeline: ingest -> stats -> frontier -> optimize -> train -> predict -> backtest -> summary.

Every command reads its inputs from ``--out`` (default ``./out``), writes its
outputs there atomically, and stamps them with the config hash and seed.
JSON outputs carry a ``metadata`` field; CSV outputs get a ``<name>.meta.json``
sidecar so their headers stay exactly as documented.

Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytics, backtest, ingest, optimizer
from ._accel import backend_name
from ._io import atomic_write_json, atomic_write_text
from .config import load_config
from .errors import ConfigError, DataError, MissingArtifactError, NumericError
from .forecaster import checkpoint, predict_next, train, window

log = logging.getLogger("lstmfolio")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


class Context:
    def __init__(self, cfg, out):
        self.cfg = cfg
        self.out = Path(out)

    def metadata(self, command):
        return {
            "command": command,
            "config_hash": self.cfg.hash(),
            "seed": self.cfg.seed,
            "version": __version__,
        }

    def sector_dir(self, sector):
        return self.out / sector

    def prices_path(self):
        return self.out / "prices.csv"

    def model_path(self, ticker):
        safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in ticker)
        return self.out / "models" / f"{safe}.json"

    def write_csv(self, path, text, command):
        atomic_write_text(path, text)
        atomic_write_json(Path(f"{path}.meta.json"), self.metadata(command))

    def load_prices(self):
        path = require(self.prices_path(), "ingest")
        return {s.ticker: s for s in ingest.load_csv(path)}


def require(path, producer):
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(path, producer)
    return path


def _num(x):
    return repr(float(x))


def _series_for(prices, ticker):
    try:
        return prices[ticker]
    except KeyError:
        raise DataError(f"no prices for {ticker}; re-run `lstmfolio ingest`") from None


def _training_panel(ctx, prices, sector):
    cfg = ctx.cfg
    series = [_series_for(prices, t).between(cfg.train_start, cfg.train_end) for t in cfg.sectors[sector]]
    return ingest.align(series)


def _moments(ctx, prices, sector):
    panel = _training_panel(ctx, prices, sector)
    rm = analytics.return_matrix(panel)
    expected = analytics.expected_returns(rm, ctx.cfg.annual_return_method)
    cov = analytics.covariance_matrix(rm).annualize()
    return rm, expected, cov


def _square_csv(tickers, values):
    lines = [",".join(["ticker", *tickers])]
    for t, row in zip(tickers, values):
        lines.append(",".join([t, *(_num(v) for v in row)]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_ingest(ctx):
    cfg = ctx.cfg
    loaded = {}
    for path in cfg.price_paths():
        for s in ingest.load_csv(path):
            if s.ticker in loaded:
                raise DataError(f"{s.ticker} appears in more than one price file")
            loaded[s.ticker] = s
    missing = [t for t in cfg.tickers if t not in loaded]
    if missing and cfg.fetch:
        for t in missing:
            log.info("fetching %s", t)
            loaded[t] = ingest.fetch_remote(t, cfg.train_start, cfg.horizon, cfg.cache_path())
        missing = []
    if missing:
        raise DataError(f"no prices for {missing}; add them to data.prices or set data.fetch = true")
    series = [loaded[t] for t in cfg.tickers]
    ctx.write_csv(ctx.prices_path(), ingest.csv_text(series), "ingest")
    return [ctx.prices_path()]


def cmd_stats(ctx):
    prices = ctx.load_prices()
    written = []
    for sector in ctx.cfg.sectors:
        rm, _, _ = _moments(ctx, prices, sector)
        stats = analytics.stock_stats(rm, ctx.cfg.annual_return_method)
        lines = ["ticker,daily_vol,annual_vol,annual_return"]
        lines += [f"{s.ticker},{_num(s.daily_vol)},{_num(s.annual_vol)},{_num(s.annual_return)}" for s in stats]
        d = ctx.sector_dir(sector)
        ctx.write_csv(d / "stats.csv", "\n".join(lines) + "\n", "stats")
        cov = analytics.covariance_matrix(rm)
        ctx.write_csv(d / "covariance.csv", _square_csv(rm.tickers, cov.values), "stats")
        corr = analytics.correlation_matrix(rm)
        ctx.write_csv(d / "correlation.csv", _square_csv(rm.tickers, corr.values), "stats")
        written += [d / "stats.csv", d / "covariance.csv", d / "correlation.csv"]
    return written


def frontier_csv(fr):
    header = ["sample_id", "annual_return", "annual_vol", "sharpe", *(f"w_{t}" for t in fr.tickers)]
    lines = [",".join(header)]
    for i in range(len(fr)):
        cells = [str(i), _num(fr.annual_return[i]), _num(fr.annual_vol[i]), _num(fr.sharpe[i])]
        cells += [_num(w) for w in fr.weights[i]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def read_frontier_csv(path, seed=0, risk_free=optimizer.DEFAULT_RISK_FREE):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in r] for r in reader if r]
    if header[:4] != ["sample_id", "annual_return", "annual_vol", "sharpe"] or not rows:
        raise DataError(f"{path}: not a frontier CSV")
    tickers = tuple(h[2:] for h in header[4:])
    a = np.array(rows)
    return optimizer.FrontierResult(
        np.ascontiguousarray(a[:, 4:]), a[:, 1].copy(), a[:, 2].copy(), a[:, 3].copy(), seed, risk_free, tickers
    )


def cmd_frontier(ctx):
    prices = ctx.load_prices()
    written = []
    for sector in ctx.cfg.sectors:
        rm, expected, cov = _moments(ctx, prices, sector)
        fr = optimizer.monte_carlo_frontier(
            expected, cov, ctx.cfg.samples, ctx.cfg.risk_free, ctx.cfg.seed, tickers=rm.tickers
        )
        path = ctx.sector_dir(sector) / "frontier.csv"
        ctx.write_csv(path, frontier_csv(fr), "frontier")
        written.append(path)
    return written


def _portfolio_entry(c, tickers):
    return {
        "weights": c.weight_map(tickers),
        "annual_return_pct": c.annual_return * 100.0,
        "annual_risk_pct": c.annual_vol * 100.0,
        "sharpe": c.sharpe,
        "sample_id": c.index if c.index >= 0 else None,
    }


def cmd_optimize(ctx):
    prices = ctx.load_prices()
    written = []
    for sector in ctx.cfg.sectors:
        fpath = require(ctx.sector_dir(sector) / "frontier.csv", "frontier")
        fr = read_frontier_csv(fpath, ctx.cfg.seed, ctx.cfg.risk_free)
        rm, expected, cov = _moments(ctx, prices, sector)
        if fr.tickers != rm.tickers:
            raise DataError(f"{fpath}: tickers {fr.tickers} do not match config {rm.tickers}")
        eq = optimizer.evaluate(optimizer.equal_weight(len(rm.tickers)), expected, cov, ctx.cfg.risk_free)
        doc = {
            "portfolio": sector,
            "tickers": list(rm.tickers),
            "risk_free": ctx.cfg.risk_free,
            "samples": len(fr),
            "equal_weight": _portfolio_entry(eq, rm.tickers),
            "min_risk": _portfolio_entry(optimizer.min_risk_portfolio(fr), rm.tickers),
            "opt_risk": _portfolio_entry(optimizer.max_sharpe_portfolio(fr), rm.tickers),
            "metadata": ctx.metadata("optimize"),
        }
        path = ctx.sector_dir(sector) / "portfolio.json"
        atomic_write_json(path, doc)
        written.append(path)
    return written


def history_csv(history):
    lines = ["epoch,train_loss,train_mae,val_loss,val_mae"]
    lines += [",".join([str(e), *(_num(v) for v in vals)]) for e, *vals in history.rows()]
    return "\n".join(lines) + "\n"


def cmd_train(ctx):
    cfg = ctx.cfg
    prices = ctx.load_prices()
    written = []
    for ticker in cfg.tickers:
        series = _series_for(prices, ticker).between(cfg.train_start, cfg.train_end)
        mc = cfg.forecaster
        data = window(series, mc.lookback, mc.split_fraction, mc.horizon)
        log.info("training %s on %d windows", ticker, len(data))
        model, history = train(data, mc)
        path = ctx.model_path(ticker)
        checkpoint.save(model, path, ticker=ticker, metadata=ctx.metadata("train"))
        hist_path = path.with_suffix(".history.csv")
        ctx.write_csv(hist_path, history_csv(history), "train")
        written += [path, hist_path]
    return written


def _predict_window(series, model, before):
    """Closes feeding a forecast for the first session on/after ``before``."""
    mc = model.config
    past = series.closes[series.dates < np.datetime64(before, "D")]
    end = past.shape[0] - (mc.horizon - 1)
    if end < mc.lookback:
        raise DataError(f"{series.ticker}: need {mc.lookback + mc.horizon - 1} closes before {before}")
    return past[end - mc.lookback : end]


def cmd_predict(ctx):
    cfg = ctx.cfg
    prices = ctx.load_prices()
    written = []
    for sector, tickers in cfg.sectors.items():
        lines = ["ticker,date,predicted_close"]
        for ticker in tickers:
            model, _ = checkpoint.load(require(ctx.model_path(ticker), "train"))
            closes = _predict_window(_series_for(prices, ticker), model, cfg.horizon)
            lines.append(f"{ticker},{cfg.horizon},{_num(predict_next(model, closes))}")
        path = ctx.sector_dir(sector) / "predicted.csv"
        ctx.write_csv(path, "\n".join(lines) + "\n", "predict")
        written.append(path)
    return written


def read_predictions(path):
    """``ticker -> predicted close`` (last row wins) from a ``predict`` CSV."""
    with open(require(path, "predict"), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["ticker", "date", "predicted_close"]:
            raise DataError(f"{path}: header must be ticker,date,predicted_close")
        try:
            return {r["ticker"]: float(r["predicted_close"]) for r in reader}
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None


def entry_prices(series_map, tickers, on_or_after=None):
    out = {}
    for t in tickers:
        s = _series_for(series_map, t)
        idx = 0 if on_or_after is None else int(np.searchsorted(s.dates, np.datetime64(on_or_after, "D")))
        if idx >= len(s):
            raise DataError(f"{t}: no close on or after {on_or_after}")
        out[t] = float(s.closes[idx])
    return out


def horizon_prices(series_map, tickers, on_or_before=None):
    out = {}
    for t in tickers:
        s = _series_for(series_map, t)
        if on_or_before is None:
            idx = len(s) - 1
        else:
            idx = int(np.searchsorted(s.dates, np.datetime64(on_or_before, "D"), side="right")) - 1
        if idx < 0:
            raise DataError(f"{t}: no close on or before {on_or_before}")
        out[t] = float(s.closes[idx])
    return out


def _weights(portfolio_doc, which):
    try:
        return portfolio_doc[which]["weights"]
    except KeyError:
        raise DataError(f"portfolio JSON has no {which!r} weights") from None


def _write_report(ctx, directory, report, command):
    doc = report.to_dict()
    doc["metadata"] = ctx.metadata(command) if ctx is not None else {}
    atomic_write_json(directory / "report.json", doc)
    if ctx is not None:
        ctx.write_csv(directory / "report.txt", backtest.report_table(report), command)
    else:
        atomic_write_text(directory / "report.txt", backtest.report_table(report))
    return [directory / "report.json", directory / "report.txt"]


def cmd_backtest(ctx):
    cfg = ctx.cfg
    prices = ctx.load_prices()
    written = []
    for sector, tickers in cfg.sectors.items():
        d = ctx.sector_dir(sector)
        doc = json.loads(require(d / "portfolio.json", "optimize").read_text(encoding="utf-8"))
        pred_path = d / "predicted.csv"
        predicted = read_predictions(pred_path) if pred_path.is_file() else None
        if predicted is None:
            log.warning("%s: no %s, reporting actual returns only", sector, pred_path)
        entry = entry_prices(prices, tickers, cfg.holdout_start)
        actual = horizon_prices(prices, tickers, cfg.horizon)
        report = backtest.run_backtest(cfg.capital, _weights(doc, cfg.invest_in), entry, actual, predicted, sector)
        written += _write_report(ctx, d, report, "backtest")
    return written


def cmd_summary(paths, out_file=None, ctx=None):
    reports = []
    for p in paths:
        reports.append(backtest.BacktestReport.from_dict(json.loads(require(p, "backtest").read_text(encoding="utf-8"))))
    text = backtest.summary_csv(backtest.summary(reports))
    if out_file is not None and ctx is not None:
        ctx.write_csv(out_file, text, "summary")
    elif out_file is not None:
        atomic_write_text(out_file, text)
    return text


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _global_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="run configuration (TOML)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="lstmfolio", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({backend_name()})")
    sub = parser.add_subparsers(dest="command", required=True)
    g = [_global_flags()]
    sub.add_parser("ingest", parents=g, help="load/fetch prices into <out>/prices.csv")
    sub.add_parser("stats", parents=g, help="per-stock statistics, covariance and correlation")
    sub.add_parser("frontier", parents=g, help="Monte Carlo frontier samples")
    sub.add_parser("optimize", parents=g, help="equal-weight, min-risk and opt-risk portfolios")
    sub.add_parser("train", parents=g, help="train one LSTM per ticker")
    p = sub.add_parser("predict", parents=g, help="forecast horizon closes")
    p.add_argument("--checkpoint", type=Path, help="standalone mode: model checkpoint")
    p.add_argument("--window", type=Path, help="standalone mode: price CSV whose last closes form the window")
    p = sub.add_parser("backtest", parents=g, help="value the chosen portfolio at the horizon")
    p.add_argument("--portfolio", type=Path, help="standalone mode: portfolio JSON from `optimize`")
    p.add_argument("--entry", type=Path, help="standalone mode: entry price CSV (first close per ticker)")
    p.add_argument("--horizon-prices", type=Path, help="standalone mode: horizon price CSV (last close per ticker)")
    p.add_argument("--predicted", type=Path, help="standalone mode: predicted price CSV from `predict`")
    p.add_argument("--capital", type=float, default=100_000.0)
    p.add_argument("--invest-in", default="opt_risk", choices=["opt_risk", "min_risk", "equal_weight"])
    p = sub.add_parser("summary", parents=g, help="collect report JSONs into one CSV")
    p.add_argument("reports", nargs="*", type=Path)
    return parser


def _context(args):
    if args.config is None:
        raise ConfigError(f"`{args.command}` needs --config")
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be non-negative")
        cfg = cfg.with_seed(args.seed)
    return Context(cfg, args.out)


def _standalone_predict(args):
    if args.checkpoint is None or args.window is None:
        raise ConfigError("standalone predict needs both --checkpoint and --window")
    model, ticker = checkpoint.load(args.checkpoint)
    series_list = ingest.load_csv(args.window)
    by_ticker = {s.ticker: s for s in series_list}
    if ticker not in by_ticker:
        if len(series_list) != 1:
            raise DataError(f"{args.window}: cannot tell which series belongs to {ticker!r}")
        ticker = series_list[0].ticker
    s = by_ticker.get(ticker, series_list[0])
    lookback = model.config.lookback
    if len(s) < lookback:
        raise DataError(f"{args.window}: need {lookback} closes, got {len(s)}")
    value = predict_next(model, s.closes[-lookback:])
    day = np.busday_offset(s.dates[-1], model.config.horizon, roll="forward")
    return f"ticker,date,predicted_close\n{ticker},{day},{_num(value)}\n"


def _standalone_backtest(args):
    if args.portfolio is None or args.entry is None or args.horizon_prices is None:
        raise ConfigError("standalone backtest needs --portfolio, --entry and --horizon-prices")
    doc = json.loads(require(args.portfolio, "optimize").read_text(encoding="utf-8"))
    weights = _weights(doc, args.invest_in)
    entry = entry_prices({s.ticker: s for s in ingest.load_csv(args.entry)}, list(weights))
    actual = horizon_prices({s.ticker: s for s in ingest.load_csv(args.horizon_prices)}, list(weights))
    predicted = read_predictions(args.predicted) if args.predicted else None
    report = backtest.run_backtest(args.capital, weights, entry, actual, predicted, doc.get("portfolio", ""))
    _write_report(None, Path(args.out), report, "backtest")
    return backtest.report_table(report)


COMMANDS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "frontier": cmd_frontier,
    "optimize": cmd_optimize,
    "train": cmd_train,
    "predict": cmd_predict,
    "backtest": cmd_backtest,
}


def run(args):
    if args.command == "predict" and args.checkpoint is not None:
        sys.stdout.write(_standalone_predict(args))
        return
    if args.command == "backtest" and args.portfolio is not None:
        sys.stdout.write(_standalone_backtest(args))
        return
    if args.command == "summary":
        paths = list(args.reports)
        out_file = ctx = None
        if not paths:
            ctx = _context(args)
            paths = [ctx.sector_dir(s) / "report.json" for s in ctx.cfg.sectors]
            out_file = ctx.out / "summary.csv"
        sys.stdout.write(cmd_summary(paths, out_file, ctx))
        return
    ctx = _context(args)
    for path in COMMANDS[args.command](ctx):
        log.info("wrote %s", path)
    if args.command == "predict":
        for sector in ctx.cfg.sectors:
            sys.stdout.write((ctx.sector_dir(sector) / "predicted.csv").read_text(encoding="utf-8"))
    if args.command == "backtest":
        for sector in ctx.cfg.sectors:
            sys.stdout.write((ctx.sector_dir(sector) / "report.txt").read_text(encoding="utf-8"))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

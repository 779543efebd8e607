"""Run configuration: a TOML file with every default pre-populated.

Example::

    seed = 42
    portfolio_size = 5

    [data]
    prices = ["prices.csv"]        # long-format CSVs, relative to this file
    fetch = false                  # fetch missing tickers from the remote API
    cache_dir = "cache"

    [dates]
    train_start = 2016-01-01
    train_end = 2020-12-31
    holdout_start = 2021-01-01
    horizon = 2021-06-01

    [portfolio]
    capital = 100000
    samples = 10000
    risk_free = 0.01
    annual_return_method = "yearly"   # or "global"
    invest_in = "opt_risk"            # or "min_risk", "equal_weight"

    [forecaster]                      # any ModelConfig field
    lookback = 50

    [sectors.pharma]
    tickers = ["SUNPHARMA.NS", "DRREDDY.NS", "DIVISLAB.NS", "CIPLA.NS", "LUPIN.NS"]
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ._io import dump_json, sha256_text
from .analytics import ANNUAL_RETURN_METHODS
from .errors import ConfigError
from .forecaster import ModelConfig

INVEST_CHOICES = ("opt_risk", "min_risk", "equal_weight")


@dataclass(frozen=True)
class RunConfig:
    sectors: dict  # name -> tuple of tickers
    prices: tuple = ()  # as written in the file; see price_paths()
    fetch: bool = False
    cache_dir: str = "cache"
    train_start: dt.date = dt.date(2016, 1, 1)
    train_end: dt.date = dt.date(2020, 12, 31)
    holdout_start: dt.date = dt.date(2021, 1, 1)
    horizon: dt.date = dt.date(2021, 6, 1)
    capital: float = 100_000.0
    samples: int = 10_000
    risk_free: float = 0.01
    annual_return_method: str = "yearly"
    invest_in: str = "opt_risk"
    portfolio_size: int = 5
    seed: int = 0
    forecaster: ModelConfig = field(default_factory=ModelConfig)
    base_dir: Path = field(default=Path("."), compare=False)

    def price_paths(self):
        return [self.base_dir / p for p in self.prices]

    def cache_path(self):
        return self.base_dir / self.cache_dir

    @property
    def tickers(self):
        """Every configured ticker once, in first-seen order."""
        seen = {}
        for names in self.sectors.values():
            for t in names:
                seen.setdefault(t, None)
        return list(seen)

    def canonical(self):
        d = {}
        for f in dataclasses.fields(self):
            if f.name == "base_dir":
                continue
            v = getattr(self, f.name)
            if isinstance(v, ModelConfig):
                v = v.to_dict()
            elif isinstance(v, dt.date):
                v = str(v)
            elif isinstance(v, tuple):
                v = [str(x) for x in v]
            elif isinstance(v, dict):
                v = {k: list(x) for k, x in v.items()}
            d[f.name] = v
        return d

    def hash(self):
        return sha256_text(dump_json(self.canonical()))

    def with_seed(self, seed):
        forecaster = self.forecaster.replace(seed=seed)
        return dataclasses.replace(self, seed=seed, forecaster=forecaster)


def _date(section, key, value):
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected an ISO date, got {value!r}") from None


def _take(table, section, allowed):
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
    return table


def parse_config(raw, base_dir=Path(".")):
    """Validate a decoded TOML mapping into a :class:`RunConfig`."""
    base_dir = Path(base_dir)
    _take(raw, "<root>", {"seed", "portfolio_size", "data", "dates", "portfolio", "forecaster", "sectors"})
    kw = {}
    if "seed" in raw:
        if not isinstance(raw["seed"], int) or raw["seed"] < 0:
            raise ConfigError("seed: must be a non-negative integer")
        kw["seed"] = raw["seed"]
    if "portfolio_size" in raw:
        if not isinstance(raw["portfolio_size"], int):
            raise ConfigError("portfolio_size: must be an integer")
        kw["portfolio_size"] = raw["portfolio_size"]

    data = _take(raw.get("data", {}), "data", {"prices", "fetch", "cache_dir"})
    prices = data.get("prices", [])
    if isinstance(prices, str):
        prices = [prices]
    kw["prices"] = tuple(str(p) for p in prices)
    kw["fetch"] = bool(data.get("fetch", False))
    kw["cache_dir"] = str(data.get("cache_dir", "cache"))
    kw["base_dir"] = base_dir

    dates = _take(raw.get("dates", {}), "dates", {"train_start", "train_end", "holdout_start", "horizon"})
    for key, value in dates.items():
        kw[key] = _date("dates", key, value)

    pf = _take(
        raw.get("portfolio", {}),
        "portfolio",
        {"capital", "samples", "risk_free", "annual_return_method", "invest_in"},
    )
    for key, kind in (("capital", float), ("risk_free", float), ("samples", int)):
        if key in pf:
            try:
                kw[key] = kind(pf[key])
            except (TypeError, ValueError):
                raise ConfigError(f"portfolio.{key}: expected a number, got {pf[key]!r}") from None
    for key in ("annual_return_method", "invest_in"):
        if key in pf:
            kw[key] = str(pf[key])

    fc = raw.get("forecaster", {})
    fields = {f.name for f in dataclasses.fields(ModelConfig)}
    _take(fc, "forecaster", fields)
    seed = kw.get("seed", 0)
    try:
        kw["forecaster"] = ModelConfig(**{"seed": seed, **fc})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"forecaster: {exc}") from None

    sectors = raw.get("sectors", {})
    if not sectors:
        raise ConfigError("sectors: at least one [sectors.<name>] table is required")
    kw["sectors"] = {}
    for name, table in sectors.items():
        _take(table, f"sectors.{name}", {"tickers"})
        tickers = table.get("tickers")
        if not isinstance(tickers, list) or not all(isinstance(t, str) and t for t in tickers):
            raise ConfigError(f"sectors.{name}.tickers: expected a list of ticker strings")
        if len(set(tickers)) != len(tickers):
            raise ConfigError(f"sectors.{name}.tickers: duplicate tickers")
        kw["sectors"][name] = tuple(tickers)

    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg):
    if not cfg.train_start < cfg.train_end:
        raise ConfigError("dates.train_end: must be after dates.train_start")
    if not cfg.train_end < cfg.holdout_start:
        raise ConfigError("dates.holdout_start: training range must precede the hold-out start")
    if not cfg.holdout_start < cfg.horizon:
        raise ConfigError("dates.horizon: must be after dates.holdout_start")
    if not cfg.capital > 0:
        raise ConfigError("portfolio.capital: must be positive")
    if cfg.samples < 1:
        raise ConfigError("portfolio.samples: must be >= 1")
    if cfg.annual_return_method not in ANNUAL_RETURN_METHODS:
        raise ConfigError(f"portfolio.annual_return_method: one of {ANNUAL_RETURN_METHODS}")
    if cfg.invest_in not in INVEST_CHOICES:
        raise ConfigError(f"portfolio.invest_in: one of {INVEST_CHOICES}")
    if cfg.portfolio_size < 1:
        raise ConfigError("portfolio_size: must be >= 1")
    for name, tickers in cfg.sectors.items():
        if len(tickers) != cfg.portfolio_size:
            raise ConfigError(
                f"sectors.{name}.tickers: expected {cfg.portfolio_size} tickers, got {len(tickers)}"
            )


def load_config(path):
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw, base_dir=path.parent)

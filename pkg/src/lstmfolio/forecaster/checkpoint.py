"""JSON checkpoints for trained models."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .._io import atomic_write_json
from ..errors import DataError
from .data import MinMaxScaler
from .network import LstmModel, ModelConfig

FORMAT = "lstmfolio-checkpoint"
VERSION = 1


def to_dict(model, ticker=None, metadata=None):
    return {
        "format": FORMAT,
        "version": VERSION,
        "ticker": ticker,
        "config": model.config.to_dict(),
        "scaler": {"min": model.scaler.min, "max": model.scaler.max},
        "params": {
            name: {"shape": list(p.shape), "data": p.ravel().tolist()}
            for name, p in sorted(model.params.items())
        },
        "metadata": metadata or {},
    }


def from_dict(payload):
    if payload.get("format") != FORMAT:
        raise DataError(f"not a {FORMAT} file")
    if payload.get("version") != VERSION:
        raise DataError(f"unsupported checkpoint version {payload.get('version')!r}")
    config = ModelConfig(**payload["config"])
    scaler = MinMaxScaler(payload["scaler"]["min"], payload["scaler"]["max"])
    params = {}
    for name, blob in payload["params"].items():
        arr = np.array(blob["data"], dtype=np.float64)
        shape = tuple(blob["shape"])
        if arr.size != int(np.prod(shape)):
            raise DataError(f"{name}: {arr.size} values for declared shape {shape}")
        params[name] = arr.reshape(shape)
    return LstmModel(config, scaler, params)


def save(model, path, ticker=None, metadata=None):
    atomic_write_json(path, to_dict(model, ticker, metadata))


def load(path):
    """Return ``(model, ticker)``."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataError(f"checkpoint {path} not found") from exc
    except ValueError as exc:
        raise DataError(f"checkpoint {path} is not valid JSON") from exc
    return from_dict(payload), payload.get("ticker")

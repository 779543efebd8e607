"""Sliding windows over a close-price series and min-max scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericError


@dataclass(frozen=True)
class MinMaxScaler:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise NumericError(f"degenerate scaler: max {self.max} <= min {self.min}")

    @classmethod
    def fit(cls, values):
        values = np.asarray(values, dtype=np.float64)
        return cls(float(values.min()), float(values.max()))

    def scale(self, x):
        return (np.asarray(x, dtype=np.float64) - self.min) / (self.max - self.min)

    def inverse(self, y):
        return np.asarray(y, dtype=np.float64) * (self.max - self.min) + self.min


def minmax_scale(x, scaler):
    return scaler.scale(x)


def inverse_scale(y, scaler):
    return scaler.inverse(y)


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """Scaled ``(window, next close)`` pairs split chronologically.

    ``inputs`` has shape ``(m, lookback, 1)``; rows ``[:split]`` are training
    pairs and ``[split:]`` validation pairs.  ``target_index[k]`` is the
    position of target ``k`` in the source series.
    """

    inputs: np.ndarray
    targets: np.ndarray
    split: int
    scaler: MinMaxScaler
    target_index: np.ndarray
    lookback: int
    horizon: int = 1

    def __len__(self):
        return self.targets.shape[0]

    @property
    def train(self):
        return self.inputs[: self.split], self.targets[: self.split]

    @property
    def validation(self):
        return self.inputs[self.split :], self.targets[self.split :]


def split_index(m, split_fraction):
    if not 0 < split_fraction <= 1:
        raise ValueError(f"split_fraction must be in (0, 1], got {split_fraction}")
    return min(max(int(np.floor(m * split_fraction)), 1), m)


def window(prices, lookback, split_fraction=0.8, horizon=1):
    """Build ``m = T - lookback - horizon + 1`` windows from a price series.

    The scaler sees only closes touched by training pairs, so validation
    data never leaks into it.
    """
    closes = np.asarray(getattr(prices, "closes", prices), dtype=np.float64)
    if lookback < 1 or horizon < 1:
        raise ValueError("lookback and horizon must be >= 1")
    T = closes.shape[0]
    m = T - lookback - horizon + 1
    if m < 2:
        raise DataError(f"series of {T} closes too short for lookback {lookback}, horizon {horizon}")
    split = split_index(m, split_fraction)
    scaler = MinMaxScaler.fit(closes[: split + lookback + horizon - 1])
    scaled = scaler.scale(closes)
    idx = np.arange(m)[:, None] + np.arange(lookback)[None, :]
    inputs = scaled[idx][:, :, None]
    target_index = np.arange(m) + lookback + horizon - 1
    return WindowedDataset(inputs, scaled[target_index], split, scaler, target_index, lookback, horizon)

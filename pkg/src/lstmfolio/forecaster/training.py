"""Mini-batch Adam training, per-epoch metrics and grid search."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .data import WindowedDataset, window
from .network import LstmModel, ModelConfig, dropout_masks, huber_loss, loss_and_grads, predict_scaled

log = logging.getLogger(__name__)

# generator streams derived from ModelConfig.seed
_INIT, _SHUFFLE, _DROPOUT = 0, 1, 2


class Adam:
    """Bias-corrected adaptive moment estimation (Keras defaults)."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name in sorted(params):
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_mae: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_mae: list = field(default_factory=list)
    # MAE in price units, alongside the scaled ones above
    train_mae_price: list = field(default_factory=list)
    val_mae_price: list = field(default_factory=list)

    def __len__(self):
        return len(self.train_loss)

    def rows(self):
        return list(zip(range(1, len(self) + 1), self.train_loss, self.train_mae, self.val_loss, self.val_mae))

    def __eq__(self, other):
        if not isinstance(other, TrainHistory):
            return NotImplemented
        return self.rows() == other.rows()


def evaluate(model, inputs, targets):
    """``(huber, mae_scaled, mae_price)`` in inference mode; NaNs for an empty set."""
    if targets.shape[0] == 0:
        return float("nan"), float("nan"), float("nan")
    pred = predict_scaled(model, inputs)
    loss = float(huber_loss(pred, targets, model.config.huber_delta).mean())
    mae = float(np.abs(pred - targets).mean())
    span = model.scaler.max - model.scaler.min
    return loss, mae, mae * span


def train(data: WindowedDataset, config: ModelConfig, log_every=0):
    """Fit a fresh model on ``data[:split]``; returns ``(model, history)``.

    Each epoch shuffles the training pairs (never across the split), runs
    mini-batch Adam steps with dropout active, then records loss and MAE on
    both partitions with dropout off.  Initialisation, shuffling and dropout
    draw from separate generators seeded by ``config.seed``.
    """
    if data.lookback != config.lookback:
        raise ValueError(f"dataset lookback {data.lookback} != config lookback {config.lookback}")
    x_train, y_train = data.train
    x_val, y_val = data.validation
    if y_train.shape[0] == 0:
        raise DataError("empty training partition")
    seed = int(config.seed)
    model = LstmModel.initialise(config, data.scaler, np.random.default_rng([seed, _INIT]))
    shuffle_rng = np.random.default_rng([seed, _SHUFFLE])
    dropout_rng = np.random.default_rng([seed, _DROPOUT])
    opt = Adam(model.params, config.learning_rate)
    history = TrainHistory()
    n = y_train.shape[0]
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            masks = dropout_masks(config, idx.shape[0], config.lookback, dropout_rng)
            _, grads, _ = loss_and_grads(model.params, config, x_train[idx], y_train[idx], masks)
            opt.step(model.params, grads)
        tl, tm, tmp = evaluate(model, x_train, y_train)
        vl, vm, vmp = evaluate(model, x_val, y_val)
        history.train_loss.append(tl)
        history.train_mae.append(tm)
        history.val_loss.append(vl)
        history.val_mae.append(vm)
        history.train_mae_price.append(tmp)
        history.val_mae_price.append(vmp)
        if log_every and (epoch + 1) % log_every == 0:
            log.info("epoch %d: loss %.6f mae %.6f val_loss %.6f val_mae %.6f", epoch + 1, tl, tm, vl, vm)
    return model, history


def grid(base: ModelConfig, **axes):
    """Cartesian product of config overrides, e.g. ``grid(cfg, epochs=[50, 100], batch_size=[32, 64])``."""
    names = list(axes)
    return [base.replace(**dict(zip(names, values))) for values in itertools.product(*axes.values())]


def grid_search(candidates, data):
    """Train every candidate and return the one with the lowest final validation loss.

    ``data`` is a price series (windowed per candidate) or a ready
    :class:`WindowedDataset` shared by all candidates.  Ties keep the earlier
    candidate.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("empty grid")
    best, best_loss = None, np.inf
    for cfg in candidates:
        ds = data if isinstance(data, WindowedDataset) else window(data, cfg.lookback, cfg.split_fraction, cfg.horizon)
        _, hist = train(ds, cfg)
        loss = hist.val_loss[-1]
        if np.isnan(loss):
            raise DataError("grid search needs a non-empty validation partition")
        log.info("grid candidate %s: val_loss %.6g", cfg, loss)
        if best is None or loss < best_loss:
            best, best_loss = cfg, loss
    return best

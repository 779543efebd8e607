"""Stacked-LSTM regressor: forward pass, loss and backpropagation through time.

Layout: LSTM -> dropout -> ... -> LSTM -> dropout -> dense (ReLU) -> dense(1,
sigmoid).  Every LSTM layer but the last passes its whole hidden sequence on;
the dense layer reads the final hidden state of the last one.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .. import kernels
from ..errors import DataError
from .data import MinMaxScaler

sigmoid = kernels.sigmoid


@dataclass(frozen=True)
class ModelConfig:
    lookback: int = 50
    lstm_units: int = 256
    lstm_layers: int = 2
    dropout_rate: float = 0.3
    dense_units: int = 256
    batch_size: int = 64
    epochs: int = 100
    huber_delta: float = 1.0
    learning_rate: float = 1e-3
    seed: int = 0
    horizon: int = 1
    split_fraction: float = 0.8

    def __post_init__(self):
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.lstm_units < 1 or self.lstm_layers < 1 or self.dense_units < 1:
            raise ValueError("layer sizes must be >= 1")
        if not self.huber_delta > 0:
            raise ValueError("huber_delta must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    def replace(self, **changes):
        return ModelConfig(**{**asdict(self), **changes})

    def to_dict(self):
        return asdict(self)


def param_shapes(config):
    H, D = config.lstm_units, config.dense_units
    shapes = {}
    width = 1
    for k in range(config.lstm_layers):
        shapes[f"lstm{k}.W"] = (width, 4 * H)
        shapes[f"lstm{k}.U"] = (H, 4 * H)
        shapes[f"lstm{k}.b"] = (4 * H,)
        width = H
    shapes["dense.W"] = (H, D)
    shapes["dense.b"] = (D,)
    shapes["head.W"] = (D, 1)
    shapes["head.b"] = (1,)
    return shapes


def init_params(config, rng):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, forget bias 1."""
    params = {}
    H = config.lstm_units
    for name, shape in param_shapes(config).items():
        if name.endswith(".b"):
            p = np.zeros(shape)
            if name.startswith("lstm"):
                p[H : 2 * H] = 1.0
        else:
            limit = 1.0 / np.sqrt(shape[0])
            p = rng.uniform(-limit, limit, size=shape)
        params[name] = p
    return params


@dataclass(eq=False)
class LstmModel:
    config: ModelConfig
    scaler: MinMaxScaler
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = param_shapes(self.config)
        if set(expected) != set(self.params):
            raise DataError(f"parameter names {sorted(self.params)} do not match config")
        for name, shape in expected.items():
            if tuple(self.params[name].shape) != shape:
                raise DataError(f"{name}: shape {self.params[name].shape}, expected {shape}")

    @classmethod
    def initialise(cls, config, scaler, rng=None):
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        return cls(config, scaler, init_params(config, rng))


# ---------------------------------------------------------------------------
# Elementary ops
# ---------------------------------------------------------------------------


def lstm_cell_forward(params, x_t, h_prev, c_prev):
    """One LSTM step for a single sample.

    ``params`` is ``(W, U, b)`` with gate blocks ordered input, forget,
    candidate, output.
    """
    w, u, b = params
    x_t = np.atleast_1d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    H = u.shape[0]
    if w.shape != (x_t.shape[0], 4 * H) or h_prev.shape != (H,) or c_prev.shape != (H,) or b.shape != (4 * H,):
        raise ValueError("shape mismatch in lstm_cell_forward")
    z = x_t @ w + h_prev @ u + b
    i = sigmoid(z[:H])
    f = sigmoid(z[H : 2 * H])
    g = np.tanh(z[2 * H : 3 * H])
    o = sigmoid(z[3 * H :])
    c = f * c_prev + i * g
    return o * np.tanh(c), c


def dropout(v, rate, training, rng=None):
    """Inverted dropout: zero with probability ``rate``, scale survivors by 1/(1-rate)."""
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    v = np.asarray(v, dtype=np.float64)
    if not training or rate == 0:
        return v
    keep = rng.random(v.shape) >= rate
    return v * keep / (1.0 - rate)


def dropout_masks(config, batch, steps, rng):
    """Inverted-dropout masks for one training batch, or ``None`` when rate is 0."""
    rate = config.dropout_rate
    if rate == 0:
        return None
    H = config.lstm_units
    masks = []
    for k in range(config.lstm_layers):
        shape = (steps, batch, H) if k < config.lstm_layers - 1 else (batch, H)
        masks.append((rng.random(shape) >= rate) / (1.0 - rate))
    return masks


def huber_loss(pred, target, delta=1.0):
    """Elementwise Huber loss of ``pred - target``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    e = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    a = np.abs(e)
    return np.where(a <= delta, 0.5 * e * e, delta * (a - 0.5 * delta))


def huber_grad(pred, target, delta=1.0):
    e = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return np.clip(e, -delta, delta)


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


def _time_major(x, lookback):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3 or x.shape[2] != 1 or x.shape[1] != lookback:
        raise ValueError(f"expected windows of shape (B, {lookback}, 1), got {x.shape}")
    return np.ascontiguousarray(x.transpose(1, 0, 2))


def forward(params, config, x, masks=None):
    """Batch forward pass; returns ``(yhat, cache)`` with ``yhat`` in (0, 1)."""
    seq = _time_major(x, config.lookback)
    last_layer = config.lstm_layers - 1
    layers = []
    last = None
    for k in range(config.lstm_layers):
        w, u, b = params[f"lstm{k}.W"], params[f"lstm{k}.U"], params[f"lstm{k}.b"]
        hs, cs, gates = kernels.lstm_forward(seq, w, u, b)
        layers.append((seq, hs, cs, gates))
        if k < last_layer:
            out = hs[1:] if masks is None else hs[1:] * masks[k]
            seq = np.ascontiguousarray(out)
        else:
            last = hs[-1] if masks is None else hs[-1] * masks[k]
    zd = last @ params["dense.W"] + params["dense.b"]
    ad = np.maximum(zd, 0.0)
    zo = ad @ params["head.W"] + params["head.b"]
    yhat = sigmoid(zo[:, 0])
    cache = {"layers": layers, "masks": masks, "last": last, "zd": zd, "ad": ad, "yhat": yhat}
    return yhat, cache


def backward(params, config, cache, dyhat):
    """Gradients of a scalar loss given ``dyhat = dL/dyhat`` for every sample."""
    grads = {}
    masks = cache["masks"]
    yhat, ad, zd, last = cache["yhat"], cache["ad"], cache["zd"], cache["last"]
    dzo = (dyhat * yhat * (1.0 - yhat))[:, None]
    grads["head.W"] = ad.T @ dzo
    grads["head.b"] = dzo.sum(axis=0)
    dzd = (dzo @ params["head.W"].T) * (zd > 0)
    grads["dense.W"] = last.T @ dzd
    grads["dense.b"] = dzd.sum(axis=0)
    dlast = dzd @ params["dense.W"].T
    L = config.lstm_layers
    if masks is not None:
        dlast = dlast * masks[L - 1]
    seq0 = cache["layers"][L - 1][0]
    dh = np.zeros((seq0.shape[0], seq0.shape[1], config.lstm_units))
    dh[-1] = dlast
    for k in range(L - 1, -1, -1):
        seq, hs, cs, gates = cache["layers"][k]
        w, u = params[f"lstm{k}.W"], params[f"lstm{k}.U"]
        dx, dw, du, db = kernels.lstm_backward(seq, w, u, hs, cs, gates, dh)
        grads[f"lstm{k}.W"] = dw
        grads[f"lstm{k}.U"] = du
        grads[f"lstm{k}.b"] = db
        if k > 0:
            dh = dx if masks is None else dx * masks[k - 1]
    return grads


def loss_and_grads(params, config, x, y, masks=None):
    """Mean Huber loss over the batch and its gradient for every parameter."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] == 0:
        raise ValueError("empty batch")
    yhat, cache = forward(params, config, x, masks)
    loss = float(huber_loss(yhat, y, config.huber_delta).mean())
    dyhat = huber_grad(yhat, y, config.huber_delta) / y.shape[0]
    return loss, backward(params, config, cache, dyhat), yhat


def predict_scaled(model, inputs, chunk=1024):
    """Inference-mode predictions for a stack of scaled windows."""
    inputs = np.asarray(inputs, dtype=np.float64)
    out = [forward(model.params, model.config, inputs[s : s + chunk])[0] for s in range(0, inputs.shape[0], chunk)]
    return np.concatenate(out) if out else np.empty(0)


def model_forward(model, window, training=False, rng=None):
    """Scaled prediction in (0, 1) for one scaled window of ``lookback`` values."""
    x = np.asarray(window, dtype=np.float64).reshape(1, -1, 1)
    if x.shape[1] != model.config.lookback:
        raise ValueError(f"window length {x.shape[1]} != lookback {model.config.lookback}")
    masks = None
    if training:
        if rng is None:
            raise ValueError("training mode needs an rng for dropout")
        masks = dropout_masks(model.config, 1, model.config.lookback, rng)
    yhat, _ = forward(model.params, model.config, x, masks)
    return float(yhat[0])


def predict_next(model, last_closes):
    """Next close (``horizon`` steps ahead) from the last ``lookback`` closes."""
    closes = np.asarray(last_closes, dtype=np.float64).ravel()
    if closes.shape[0] != model.config.lookback:
        raise ValueError(f"need exactly {model.config.lookback} closes, got {closes.shape[0]}")
    if not np.all(np.isfinite(closes) & (closes > 0)):
        raise DataError("closes must be positive and finite")
    y = model_forward(model, model.scaler.scale(closes))
    return float(model.scaler.inverse(y))

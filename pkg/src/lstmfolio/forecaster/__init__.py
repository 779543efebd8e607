"""Univariate LSTM next-close forecaster written directly on numpy."""

from .data import MinMaxScaler, WindowedDataset, inverse_scale, minmax_scale, window
from .network import (
    LstmModel,
    ModelConfig,
    backward,
    dropout,
    forward,
    huber_loss,
    init_params,
    loss_and_grads,
    lstm_cell_forward,
    model_forward,
    param_shapes,
    predict_next,
    predict_scaled,
)
from .training import Adam, TrainHistory, evaluate, grid, grid_search, train

__all__ = [
    "Adam",
    "LstmModel",
    "MinMaxScaler",
    "ModelConfig",
    "TrainHistory",
    "WindowedDataset",
    "backward",
    "dropout",
    "evaluate",
    "forward",
    "grid",
    "grid_search",
    "huber_loss",
    "init_params",
    "inverse_scale",
    "loss_and_grads",
    "lstm_cell_forward",
    "minmax_scale",
    "model_forward",
    "param_shapes",
    "predict_next",
    "predict_scaled",
    "train",
    "window",
]

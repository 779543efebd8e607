"""Shared test data."""

from pathlib import Path

import numpy as np

from lstmfolio.forecaster import ModelConfig

FIXTURES = Path(__file__).parent / "fixtures"

# reduced config that fits a clean sine wave; values found during development
LEARN_CONFIG = ModelConfig(
    lookback=10,
    lstm_units=16,
    dense_units=16,
    dropout_rate=0.3,
    batch_size=32,
    epochs=200,
    learning_rate=3e-3,
    seed=0,
)


def sine_closes(n=400, period=50, level=100.0, amplitude=10.0):
    t = np.arange(n)
    return level + amplitude * np.sin(2 * np.pi * t / period)

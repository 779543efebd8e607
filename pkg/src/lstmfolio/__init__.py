"""Sector portfolio construction from daily closes.

Monte Carlo sampling of long-only portfolios picks minimum-risk and
maximum-Sharpe weights; a numpy LSTM forecasts next-day closes; a hold-out
backtest compares actual and predicted returns.
"""

__version__ = "0.1.0"

from ._accel import USE_NUMBA, backend_name  # noqa: E402

__all__ = ["USE_NUMBA", "backend_name", "__version__"]

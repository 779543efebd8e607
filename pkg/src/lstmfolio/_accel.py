"""Numba switch.

Set ``LSTMFOLIO_DISABLE_NUMBA=1`` to run every kernel on its pure-numpy path.
The flag is read once, at import time.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("LSTMFOLIO_DISABLE_NUMBA", "").strip().lower() not in _FALSEY

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA = _numba is not None and not NUMBA_DISABLED


def njit(func):
    """Compile ``func`` with numba when enabled; otherwise return it untouched."""
    if USE_NUMBA:
        return _numba.njit(cache=True)(func)
    return func


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

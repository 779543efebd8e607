"""Hot numeric kernels.

Every kernel exists twice: a vectorised numpy version (``*_numpy``) and a
loop version written for ``numba.njit`` (``*_loop``).  The public names
(``frontier_stats``, ``pareto_scan``, ``lstm_backward``) resolve to the
compiled loop version unless numba is unavailable or disabled through
``LSTMFOLIO_DISABLE_NUMBA``.  ``lstm_forward`` is always the numpy version.

LSTM arrays are time-major: inputs ``(T, B, D)``, hidden/cell states
``(T + 1, B, H)`` with index 0 holding the zero initial state, and activated
gates ``(T, B, 4H)`` in the order input, forget, candidate, output.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "frontier_stats",
    "pareto_scan",
    "lstm_forward",
    "lstm_backward",
    "sigmoid",
]


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * np.tanh(0.5 * z) + 0.5


# ---------------------------------------------------------------------------
# Portfolio candidate evaluation
# ---------------------------------------------------------------------------


def _frontier_stats_numpy(weights, expected, cov, risk_free):
    ret = weights @ expected
    var = np.einsum("ij,jk,ik->i", weights, cov, weights)
    vol = np.sqrt(np.maximum(var, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        sharpe = (ret - risk_free) / vol
    return ret, vol, sharpe


def _frontier_stats_loop(weights, expected, cov, risk_free):
    # variance by the term-by-term expansion: own-variance terms plus doubled pair terms
    m, n = weights.shape
    ret = np.empty(m)
    vol = np.empty(m)
    sharpe = np.empty(m)
    for k in range(m):
        r = 0.0
        v = 0.0
        for i in range(n):
            wi = weights[k, i]
            r += wi * expected[i]
            v += wi * wi * cov[i, i]
            for j in range(i + 1, n):
                v += 2.0 * wi * weights[k, j] * cov[i, j]
        if v < 0.0:
            v = 0.0
        s = math.sqrt(v)
        ret[k] = r
        vol[k] = s
        if s > 0.0:
            sharpe[k] = (r - risk_free) / s
        elif r - risk_free > 0.0:
            sharpe[k] = np.inf
        elif r - risk_free < 0.0:
            sharpe[k] = -np.inf
        else:
            sharpe[k] = np.nan
    return ret, vol, sharpe


# ---------------------------------------------------------------------------
# Pareto scan (minimise vol, maximise return)
# ---------------------------------------------------------------------------


def _pareto_order(vol, ret):
    idx = np.arange(vol.shape[0])
    return np.lexsort((idx, -ret, vol))


def _pareto_scan_numpy(vol, ret):
    order = _pareto_order(vol, ret)
    r = ret[order]
    best = np.maximum.accumulate(r)
    prev = np.empty_like(best)
    prev[0] = -np.inf
    prev[1:] = best[:-1]
    return order[r > prev]


def _pareto_keep_loop(order, ret):
    keep = np.empty(order.shape[0], dtype=np.int64)
    count = 0
    best = -np.inf
    for k in range(order.shape[0]):
        r = ret[order[k]]
        if r > best:
            keep[count] = order[k]
            count += 1
            best = r
    return keep[:count]


# ---------------------------------------------------------------------------
# LSTM layer, forward and backward through time
# ---------------------------------------------------------------------------


def _lstm_forward_numpy(x, w, u, b):
    T, B, _ = x.shape
    H = u.shape[0]
    hs = np.zeros((T + 1, B, H))
    cs = np.zeros((T + 1, B, H))
    gates = np.empty((T, B, 4 * H))
    for t in range(T):
        z = x[t] @ w + hs[t] @ u + b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = sigmoid(z[:, 3 * H :])
        cs[t + 1] = f * cs[t] + i * g
        hs[t + 1] = o * np.tanh(cs[t + 1])
        gates[t, :, :H] = i
        gates[t, :, H : 2 * H] = f
        gates[t, :, 2 * H : 3 * H] = g
        gates[t, :, 3 * H :] = o
    return hs, cs, gates


def _lstm_forward_loop(x, w, u, b):
    T, B, _ = x.shape
    H = u.shape[0]
    hs = np.zeros((T + 1, B, H))
    cs = np.zeros((T + 1, B, H))
    gates = np.empty((T, B, 4 * H))
    for t in range(T):
        z = np.dot(x[t], w) + np.dot(hs[t], u)
        for r in range(B):
            for k in range(H):
                ig = 0.5 * math.tanh(0.5 * (z[r, k] + b[k])) + 0.5
                fg = 0.5 * math.tanh(0.5 * (z[r, H + k] + b[H + k])) + 0.5
                gg = math.tanh(z[r, 2 * H + k] + b[2 * H + k])
                og = 0.5 * math.tanh(0.5 * (z[r, 3 * H + k] + b[3 * H + k])) + 0.5
                c = fg * cs[t, r, k] + ig * gg
                cs[t + 1, r, k] = c
                hs[t + 1, r, k] = og * math.tanh(c)
                gates[t, r, k] = ig
                gates[t, r, H + k] = fg
                gates[t, r, 2 * H + k] = gg
                gates[t, r, 3 * H + k] = og
    return hs, cs, gates


def _lstm_backward_numpy(x, w, u, hs, cs, gates, dh_out):
    T, B, _ = x.shape
    H = u.shape[0]
    dw = np.zeros_like(w)
    du = np.zeros_like(u)
    db = np.zeros(4 * H)
    dx = np.empty_like(x)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H : 2 * H]
        g = gates[t, :, 2 * H : 3 * H]
        o = gates[t, :, 3 * H :]
        tc = np.tanh(cs[t + 1])
        dh = dh_out[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * cs[t] * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H :] = dh * tc * o * (1.0 - o)
        dw += x[t].T @ dz
        du += hs[t].T @ dz
        db += dz.sum(axis=0)
        dx[t] = dz @ w.T
        dh_next = dz @ u.T
        dc_next = dc * f
    return dx, dw, du, db


def _lstm_backward_loop(x, w, u, hs, cs, gates, dh_out):
    T, B, D = x.shape
    H = u.shape[0]
    dw = np.zeros_like(w)
    du = np.zeros_like(u)
    db = np.zeros(4 * H)
    dx = np.empty_like(x)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    wt = np.ascontiguousarray(w.T)
    ut = np.ascontiguousarray(u.T)
    for t in range(T - 1, -1, -1):
        for r in range(B):
            for k in range(H):
                ig = gates[t, r, k]
                fg = gates[t, r, H + k]
                gg = gates[t, r, 2 * H + k]
                og = gates[t, r, 3 * H + k]
                tc = math.tanh(cs[t + 1, r, k])
                dh = dh_out[t, r, k] + dh_next[r, k]
                dc = dc_next[r, k] + dh * og * (1.0 - tc * tc)
                dz[r, k] = dc * gg * ig * (1.0 - ig)
                dz[r, H + k] = dc * cs[t, r, k] * fg * (1.0 - fg)
                dz[r, 2 * H + k] = dc * ig * (1.0 - gg * gg)
                dz[r, 3 * H + k] = dh * tc * og * (1.0 - og)
                dc_next[r, k] = dc * fg
        dw += np.dot(np.ascontiguousarray(x[t].T), dz)
        du += np.dot(np.ascontiguousarray(hs[t].T), dz)
        for r in range(B):
            for k in range(4 * H):
                db[k] += dz[r, k]
        dx[t] = np.dot(dz, wt)
        dh_next = np.dot(dz, ut)
    return dx, dw, du, db


# The compiled forward loop runs about 2x slower than numpy's SIMD tanh on
# every shape measured (benchmarks/bench_kernels.py), so forward stays on numpy.
lstm_forward = _lstm_forward_numpy

if USE_NUMBA:
    _frontier_stats_jit = njit(_frontier_stats_loop)
    _pareto_keep_jit = njit(_pareto_keep_loop)
    _lstm_backward_jit = njit(_lstm_backward_loop)

    def _pareto_scan_jit(vol, ret):
        return _pareto_keep_jit(_pareto_order(vol, ret), ret)

    frontier_stats = _frontier_stats_jit
    pareto_scan = _pareto_scan_jit
    lstm_backward = _lstm_backward_jit
else:
    frontier_stats = _frontier_stats_numpy
    pareto_scan = _pareto_scan_numpy
    lstm_backward = _lstm_backward_numpy

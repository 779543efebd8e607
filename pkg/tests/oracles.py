"""Independent reference computations used as test oracles.

Nothing here imports the code paths under test; each function is the
plainest possible statement of the quantity it computes.
"""

import itertools
import math

import numpy as np


def split_then_sort(rows):
    """rows: (date_str, ticker, close) -> {ticker: [(date_str, close), ...] sorted by date}."""
    out = {}
    for d, t, c in rows:
        out.setdefault(t, []).append((d, float(c)))
    return {t: sorted(v) for t, v in out.items()}


def sample_sd(xs):
    xs = [float(x) for x in xs]
    m = len(xs)
    mean = sum(xs) / m
    return math.sqrt(sum((x - mean) ** 2 for x in xs) / (m - 1))


def pearson(xs, ys):
    m = len(xs)
    mx, my = sum(xs) / m, sum(ys) / m
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    return sxy / math.sqrt(sxx * syy)


def variance_terms(w, cov):
    """Every term of the expanded portfolio variance: own terms, then doubled pairs."""
    n = len(w)
    own = [w[i] ** 2 * cov[i][i] for i in range(n)]
    pairs = [2 * w[i] * w[j] * cov[i][j] for i, j in itertools.combinations(range(n), 2)]
    return own + pairs


def quadratic_form(w, cov):
    w = np.asarray(w)
    return float(w @ np.asarray(cov) @ w)


def min_variance_unconstrained(cov):
    """Global minimum variance over sum(w) = 1 (shorting allowed): 1 / (1' S^-1 1)."""
    ones = np.ones(cov.shape[0])
    return 1.0 / float(ones @ np.linalg.solve(cov, ones))


def pareto_bruteforce(vol, ret):
    """Indices not dominated by any other point, exact duplicates collapsed to the first."""
    m = len(vol)
    keep = []
    for i in range(m):
        dominated = False
        for j in range(m):
            if j == i:
                continue
            if vol[j] <= vol[i] and ret[j] >= ret[i] and (vol[j] < vol[i] or ret[j] > ret[i]):
                dominated = True
                break
            if vol[j] == vol[i] and ret[j] == ret[i] and j < i:
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return sorted(keep, key=lambda k: (vol[k], k))


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm_step_scalar(W, U, b, x, h, c):
    """One LSTM step with scalar loops. W: (D, 4H), U: (H, 4H), b: (4H,)."""
    D = len(x)
    H = len(h)
    z = [b[k] + sum(x[d] * W[d][k] for d in range(D)) + sum(h[j] * U[j][k] for j in range(H)) for k in range(4 * H)]
    i = [_sig(z[k]) for k in range(H)]
    f = [_sig(z[H + k]) for k in range(H)]
    g = [math.tanh(z[2 * H + k]) for k in range(H)]
    o = [_sig(z[3 * H + k]) for k in range(H)]
    c_new = [f[k] * c[k] + i[k] * g[k] for k in range(H)]
    h_new = [o[k] * math.tanh(c_new[k]) for k in range(H)]
    return h_new, c_new


def unrolled_forward(params, layers, window):
    """Stacked LSTM -> ReLU dense -> sigmoid head, one sample, no dropout."""
    seq = [[float(v)] for v in window]
    for k in range(layers):
        W = params[f"lstm{k}.W"].tolist()
        U = params[f"lstm{k}.U"].tolist()
        b = params[f"lstm{k}.b"].tolist()
        H = len(U)
        h, c = [0.0] * H, [0.0] * H
        outs = []
        for x in seq:
            h, c = lstm_step_scalar(W, U, b, x, h, c)
            outs.append(h)
        seq = outs
    last = seq[-1]
    Wd = params["dense.W"].tolist()
    bd = params["dense.b"].tolist()
    dense = [max(0.0, bd[j] + sum(last[i] * Wd[i][j] for i in range(len(last)))) for j in range(len(bd))]
    Wo = params["head.W"].tolist()
    z = params["head.b"][0] + sum(dense[j] * Wo[j][0] for j in range(len(dense)))
    return _sig(z)


def central_differences(loss, params, h=1e-5):
    """Central finite-difference gradient of ``loss()`` w.r.t. every entry of ``params``."""
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        for ix in np.ndindex(arr.shape):
            old = arr[ix]
            arr[ix] = old + h
            up = loss()
            arr[ix] = old - h
            down = loss()
            arr[ix] = old
            g[ix] = (up - down) / (2 * h)
        grads[name] = g
    return grads


def relative_error(a, b, floor=1e-8):
    """Symmetric elementwise relative error |a-b| / max(|a|+|b|, floor)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), floor)

"""The numpy and loop (numba) kernel paths must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from lstmfolio import _accel, kernels


def _lstm_inputs(seed, T=5, B=3, D=2, H=4):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(T, B, D))
    w = rng.normal(0, 0.5, (D, 4 * H))
    u = rng.normal(0, 0.5, (H, 4 * H))
    b = rng.normal(0, 0.5, 4 * H)
    return x, w, u, b


@pytest.mark.parametrize("seed", range(3))
def test_lstm_forward_paths_agree(seed):
    x, w, u, b = _lstm_inputs(seed)
    ref = kernels._lstm_forward_numpy(x, w, u, b)
    for impl in (kernels._lstm_forward_loop, kernels.lstm_forward):
        for a, r in zip(impl(x, w, u, b), ref):
            np.testing.assert_allclose(a, r, rtol=0, atol=1e-13)


@pytest.mark.parametrize("seed", range(3))
def test_lstm_backward_paths_agree(seed):
    x, w, u, b = _lstm_inputs(seed)
    hs, cs, gates = kernels._lstm_forward_numpy(x, w, u, b)
    dh = np.random.default_rng(seed + 10).normal(size=hs[1:].shape)
    ref = kernels._lstm_backward_numpy(x, w, u, hs, cs, gates, dh)
    for impl in (kernels._lstm_backward_loop, kernels.lstm_backward):
        for a, r in zip(impl(x, w, u, hs, cs, gates, dh), ref):
            np.testing.assert_allclose(a, r, rtol=0, atol=1e-12)


def test_frontier_stats_paths_agree():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(5, 5))
    cov = a @ a.T
    u = rng.random((200, 5))
    w = u / u.sum(axis=1, keepdims=True)
    mu = rng.normal(0.1, 0.1, 5)
    ref = kernels._frontier_stats_numpy(w, mu, cov, 0.01)
    for impl in (kernels._frontier_stats_loop, kernels.frontier_stats):
        for got, r in zip(impl(w, mu, cov, 0.01), ref):
            np.testing.assert_allclose(got, r, rtol=1e-13, atol=1e-15)


def test_zero_vol_sharpe_conventions():
    w = np.ones((3, 1))
    cov = np.zeros((1, 1))
    for impl in (kernels._frontier_stats_numpy, kernels._frontier_stats_loop):
        for mu, expected in (([0.05], np.inf), ([-0.05], -np.inf)):
            _, _, s = impl(w, np.array(mu), cov, 0.01)
            assert np.all(s == expected)
        _, _, s = impl(w, np.array([0.01]), cov, 0.01)
        assert np.all(np.isnan(s))


def test_pareto_paths_agree():
    rng = np.random.default_rng(1)
    vol = rng.integers(0, 20, 500) / 10.0
    ret = rng.integers(0, 20, 500) / 10.0
    ref = kernels._pareto_scan_numpy(vol, ret)
    loop = kernels._pareto_keep_loop(kernels._pareto_order(vol, ret), ret)
    np.testing.assert_array_equal(loop, ref)
    np.testing.assert_array_equal(kernels.pareto_scan(vol, ret), ref)


def test_sigmoid_is_logistic():
    z = np.linspace(-30, 30, 101)
    np.testing.assert_allclose(kernels.sigmoid(z), 1 / (1 + np.exp(-z)), rtol=1e-12, atol=1e-15)
    assert kernels.sigmoid(np.array([1e4, -1e4])).tolist() == [1.0, 0.0]


def test_backend_matches_flag():
    assert _accel.backend_name() == ("numba" if _accel.USE_NUMBA else "numpy")
    assert kernels.lstm_forward is kernels._lstm_forward_numpy
    if _accel.USE_NUMBA:
        assert kernels.lstm_backward is not kernels._lstm_backward_numpy


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("true", "numpy")])
def test_env_flag_selects_numpy(flag, expected):
    env = {**os.environ, "LSTMFOLIO_DISABLE_NUMBA": flag}
    code = "import lstmfolio, lstmfolio.kernels as k; print(lstmfolio.backend_name(), k.lstm_backward.__name__)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == [expected, "_lstm_backward_numpy"]

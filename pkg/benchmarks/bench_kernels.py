"""Time each hot kernel on its numpy path and its numba path.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numba column compiles the loop kernels directly, so the comparison runs
regardless of LSTMFOLIO_DISABLE_NUMBA.  Compilation happens in a warm-up call
that is not timed.  These numbers decide dispatch: lstm_forward stays on
numpy because its loop version loses here.
"""

import argparse
import timeit

import numba
import numpy as np

from lstmfolio import kernels


def cases(rng):
    # frontier: 10k five-asset candidates
    a = rng.normal(size=(5, 5))
    cov = a @ a.T * 0.01
    u = rng.random((10_000, 5))
    w = u / u.sum(axis=1, keepdims=True)
    mu = rng.normal(0.1, 0.1, 5)
    frontier = (w, mu, cov, 0.01)

    vol = rng.random(10_000)
    ret = rng.random(10_000)

    jit_pareto = numba.njit(kernels._pareto_keep_loop)
    jit_forward = numba.njit(kernels._lstm_forward_loop)
    jit_backward = numba.njit(kernels._lstm_backward_loop)
    out = [
        ("frontier_stats 10k x 5", kernels._frontier_stats_numpy, numba.njit(kernels._frontier_stats_loop), frontier),
        (
            "pareto_scan 10k",
            kernels._pareto_scan_numpy,
            lambda v, r: jit_pareto(kernels._pareto_order(v, r), r),
            (vol, ret),
        ),
    ]
    # one LSTM layer, lookback 50, batch 64: first layer of a small model, then a default-width second layer
    for D, H in ((1, 32), (256, 256)):
        x = rng.normal(size=(50, 64, D))
        wx = rng.normal(0, 0.3, (D, 4 * H))
        uh = rng.normal(0, 0.3, (H, 4 * H))
        b = np.zeros(4 * H)
        hs, cs, gates = kernels._lstm_forward_numpy(x, wx, uh, b)
        dh = rng.normal(size=hs[1:].shape)
        tag = f"D{D} H{H}"
        out.append((f"lstm_forward {tag}", kernels._lstm_forward_numpy, jit_forward, (x, wx, uh, b)))
        out.append((f"lstm_backward {tag}", kernels._lstm_backward_numpy, jit_backward, (x, wx, uh, hs, cs, gates, dh)))
    return out


def best_of(fn, args, repeat):
    number = 3
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'kernel':<28}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, np_fn, jit_fn, inputs in cases(np.random.default_rng(0)):
        ref = np_fn(*inputs)
        got = jit_fn(*inputs)  # compiles
        for r, g in zip(ref if isinstance(ref, tuple) else (ref,), got if isinstance(got, tuple) else (got,)):
            np.testing.assert_allclose(g, r, rtol=1e-10, atol=1e-12)
        t_np = best_of(np_fn, inputs, args.repeat)
        t_jit = best_of(jit_fn, inputs, args.repeat)
        print(f"{name:<28}{t_np * 1e3:>10.3f}{t_jit * 1e3:>10.3f}{t_np / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()

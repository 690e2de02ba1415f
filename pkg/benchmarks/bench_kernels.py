#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the pure-numpy fallback.

Sizes mirror the two hot paths: pre-training batches (B = 64 nodes, d = 32)
and episodic evaluation (5-way 1-shot with 15 query shots: 5x75 transport
problems solved once per episode). Run:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from sampfsl._kernels import _pure

try:
    from sampfsl._kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, repeats=7, min_time=0.05):
    """Best wall-clock rate over ``repeats`` timing windows, seconds/call."""
    # warm up and size the inner loop so each window is ~min_time
    fn()
    t0 = time.perf_counter()
    fn()
    once = max(time.perf_counter() - t0, 1e-7)
    number = max(1, int(min_time / once))
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def cases():
    rng = np.random.default_rng(0)
    batch = rng.normal(size=(64, 32))
    episode = rng.normal(size=(80, 32))
    logits = rng.normal(size=(64, 64))
    mask = (rng.random((64, 64)) > 0.3).astype(np.uint8)
    np.fill_diagonal(mask, 1)

    zs, zq = rng.normal(size=(5, 32)), rng.normal(size=(75, 32))
    cost_eval = ((zs[:, None, :] - zq[None, :, :]) ** 2).sum(-1)
    log_r5, log_c75 = np.log(np.full(5, 0.2)), np.log(np.full(75, 1 / 75))

    a, b = rng.normal(size=(10, 4)), rng.normal(size=(15, 4))
    cost_10x15 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    log_r10, log_c15 = np.log(np.full(10, 0.1)), np.log(np.full(15, 1 / 15))

    def make(impl):
        return {
            "pairwise 64x64x32": lambda: impl.pairwise_sq_euclidean(batch, batch),
            "pairwise 80x80x32": lambda: impl.pairwise_sq_euclidean(episode, episode),
            "masked softmax 64x64": lambda: impl.masked_softmax(logits, mask),
            "sinkhorn 5x75 (1000 it)": lambda: impl.sinkhorn_log_iterations(
                cost_eval, log_r5, log_c75, 0.05, 1000, 1e-9
            ),
            "sinkhorn 10x15 (1000 it)": lambda: impl.sinkhorn_log_iterations(
                cost_10x15, log_r10, log_c15, 0.05, 1000, 1e-9
            ),
        }

    return make


def main():
    make = cases()
    pure = make(_pure)
    if _fast is None:
        print("compiled extension not available; timing the pure backend only\n")
    fast = make(_fast) if _fast is not None else None

    width = max(len(k) for k in pure)
    header = f"{'kernel':<{width}}  {'pure':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn in pure.items():
        t_pure = best_of(fn)
        if fast is None:
            print(f"{name:<{width}}  {t_pure * 1e3:>8.3f}ms  {'-':>10}  {'-':>8}")
            continue
        t_fast = best_of(fast[name])
        print(
            f"{name:<{width}}  {t_pure * 1e3:>8.3f}ms  {t_fast * 1e3:>8.3f}ms"
            f"  {t_pure / t_fast:>7.1f}x"
        )


if __name__ == "__main__":
    main()

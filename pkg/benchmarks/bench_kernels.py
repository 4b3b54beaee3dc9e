"""Benchmark the compiled kernels against the pure-Python reference.

Usage: python benchmarks/bench_kernels.py [--quick]

Covers the three hot loops: one synchronized coordinate update at large n,
sequential chain iteration at small n (many steps), and the flip event loop.
Both backends consume identical pre-drawn uniforms, so the comparison is
work-for-work.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cutpaste.kernels import available_backends


def _cum(mats):
    c = np.cumsum(mats, axis=-1)
    c[..., -1] = 1.0
    return np.ascontiguousarray(c)


def time_call(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_apply(impl, n, rng):
    word = rng.integers(1, 3, size=n).astype(np.int64)
    cum = _cum(rng.dirichlet([1.0, 1.0], size=2))
    u = rng.random(n)
    return time_call(lambda: impl.apply_matrix_rows(word, cum, u))


def bench_iterate(impl, steps, rng):
    x0 = rng.integers(1, 3, size=2).astype(np.int64)
    cum = _cum(rng.dirichlet([1.0, 1.0], size=(steps, 2)))
    u = rng.random((steps, 2))
    return time_call(lambda: impl.iterate_chain(x0, cum, u))


def bench_flips(impl, n, horizon, rng):
    crates = np.array([[0.0, 1.0], [3.0, 0.0]])

    def run():
        x = np.ones(n, dtype=np.int64)
        pos = np.zeros((2, n), dtype=np.int64)
        pos[0] = np.arange(n)
        idx = np.arange(n, dtype=np.int64)
        counts = np.array([n, 0], dtype=np.int64)
        r = np.random.default_rng(7)
        t, events = 0.0, 0
        B = 4096
        while t < horizon:
            bufs = [r.random(B) for _ in range(3)]
            ev = [np.empty(B), np.empty(B, np.int64), np.empty(B, np.int64),
                  np.empty(B, np.int64)]
            t, ne, _ = impl.flip_interval(x, pos, idx, counts, crates, t, horizon,
                                          *bufs, *ev)
            events += ne
        return events

    best = np.inf
    events = 0
    for _ in range(3):
        t0 = time.perf_counter()
        events = run()
        best = min(best, time.perf_counter() - t0)
    return best, events


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    scale = 10 if args.quick else 1
    n_apply = 1_000_000 // scale
    steps = 200_000 // scale
    n_flip = 100_000 // scale
    horizon = 1.0

    backends = available_backends()
    rng = np.random.default_rng(0)

    rows = []
    for name, impl in sorted(backends.items()):
        t_apply = bench_apply(impl, n_apply, rng)
        t_iter = bench_iterate(impl, steps, rng)
        t_flip, events = bench_flips(impl, n_flip, horizon, rng)
        rows.append((name, t_apply, t_iter, t_flip, events))

    print(f"{'backend':<10} {'apply(n=%d)' % n_apply:>18} "
          f"{'iterate(T=%d)' % steps:>20} {'flips(n=%d)' % n_flip:>18}")
    for name, t_apply, t_iter, t_flip, events in rows:
        print(f"{name:<10} {t_apply * 1e3:>15.2f} ms {t_iter * 1e3:>17.2f} ms "
              f"{t_flip * 1e3:>15.2f} ms  ({events} events)")
    if len(rows) == 2:
        by_name = {r[0]: r for r in rows}
        if {"python", "cython"} <= set(by_name):
            py, cy = by_name["python"], by_name["cython"]
            print("\nspeedup (python / cython):")
            print(f"  apply:   {py[1] / cy[1]:6.1f}x")
            print(f"  iterate: {py[2] / cy[2]:6.1f}x")
            print(f"  flips:   {py[3] / cy[3]:6.1f}x")


if __name__ == "__main__":
    main()

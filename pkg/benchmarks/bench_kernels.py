#!/usr/bin/env python3
"""Benchmark the compiled decision kernels against the NumPy fallback.

Times the three hot paths on a realistic 10-hour window: batched per-state
decisions, one backward-induction stage row, a full window solve, and an
end-to-end Monte Carlo run. Usage:

    python benchmarks/bench_kernels.py [--trials 20000]
"""

from __future__ import annotations

import argparse
import time
from dataclasses import replace

import numpy as np

from nemcharge import kernels
from nemcharge.config import default_day_config, window_config
from nemcharge.dists import rectified_normal_quadrature
from nemcharge.solver import backward_induction, extract_thresholds


def _timeit(fn, min_time=0.5):
    fn()  # warm up
    n, elapsed = 0, 0.0
    while elapsed < min_time:
        t0 = time.perf_counter()
        fn()
        elapsed += time.perf_counter() - t0
        n += 1
    return elapsed / n


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=20_000)
    args = parser.parse_args()

    lanes = kernels.available_backends()
    if "c" not in lanes:
        print("compiled kernels not built; benchmarking the NumPy lane only")

    day = default_day_config()
    cfg = window_config(day, 12, 10)
    table = backward_induction(cfg)
    thr = extract_thresholds(table, cfg.tariff)
    t = 5
    pi_p, pi_m = cfg.tariff.pi_plus(t), cfg.tariff.pi_minus(t)
    nodes, weights = rectified_normal_quadrature(cfg.der.mu[t], cfg.der.sigma[t])

    rng = np.random.default_rng(0)
    n = args.trials
    y = rng.uniform(0.0, cfg.T * cfg.v_bar, n)
    r = rng.uniform(0.0, 8.0, n)

    rows = []
    for name, impl in sorted(lanes.items()):
        decide = _timeit(lambda: impl.decide_batch(
            y, r, pi_p, pi_m, float(thr.tau[t]), float(thr.delta[t]),
            table.y_grid, table.slopes[t + 1], cfg.alpha, cfg.beta,
            cfg.d_bar, cfg.v_bar))
        stage = _timeit(lambda: impl.stage_values(
            table.y_grid, table.y_grid, table.values[t + 1], table.slopes[t + 1],
            nodes, weights, pi_p, pi_m, 0.0, float(thr.tau[t]),
            float(thr.delta[t]), cfg.alpha, cfg.beta, cfg.d_bar, cfg.v_bar))
        rows.append((name, decide, stage))

    print(f"\nbatch size {n}, grid {len(table.y_grid)} points, "
          f"{len(nodes)} quadrature nodes")
    print(f"{'lane':<6} {'decide_batch':>14} {'per state':>12} {'stage row':>12}")
    for name, decide, stage in rows:
        print(f"{name:<6} {decide * 1e3:>11.2f} ms {decide / n * 1e9:>9.0f} ns "
              f"{stage * 1e3:>9.2f} ms")
    if len(rows) == 2:
        (py_name, py_dec, py_stage), (c_name, c_dec, c_stage) = \
            sorted(rows, key=lambda x: x[0], reverse=True)
        print(f"speedup (c vs py): decide {py_dec / c_dec:.1f}x, "
              f"stage {py_stage / c_stage:.1f}x")

    # end-to-end: full solve and a Monte Carlo run under the active lane
    solve_time = _timeit(lambda: backward_induction(cfg), min_time=1.0)
    print(f"\nactive lane '{kernels.BACKEND}': full 10-interval solve "
          f"{solve_time * 1e3:.0f} ms")
    from nemcharge.sim import run_trials
    sim = replace(day.sim, n_trials=args.trials)
    t0 = time.perf_counter()
    run_trials(day, sim)
    print(f"run_trials({args.trials} paired trials, 10 h): "
          f"{time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()

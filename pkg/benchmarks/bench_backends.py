"""Benchmark the pure-Python kernels against the compiled backend.

Runs the package's hot paths with each backend selected in turn and
prints a timing table.  Usage:

    python benchmarks/bench_backends.py [--configs N] [--eigs N]
                                        [--draws N] [--costs N]
"""

from __future__ import annotations

import argparse
import math
import time

from pitomo import _kernels
from pitomo.interferometer import random_valid_config, rates_exact
from pitomo.acquisition import ScanPlan, run_scan
from pitomo.interferometer import InterferometerConfig
from pitomo.reconstruct import mle_cost
from pitomo.states import IdlerStateParams


def bench_exact_rates(n_configs: int) -> float:
    rng = _kernels.Rng(11, 0)
    configs = [random_valid_config(rng) for _ in range(n_configs)]
    t0 = time.perf_counter()
    acc = 0.0
    for cfg in configs:
        r = rates_exact(cfg)
        acc += r.rate_h + r.rate_v
    dt = time.perf_counter() - t0
    assert acc > 0
    return dt


def bench_eigh(n_solves: int) -> float:
    rng = _kernels.Rng(12, 0)
    mats = []
    for _ in range(n_solves):
        a = [complex(rng.random() - 0.5, rng.random() - 0.5) for _ in range(64)]
        h = [0j] * 64
        for i in range(8):
            for j in range(8):
                h[i * 8 + j] = a[i * 8 + j] + a[j * 8 + i].conjugate()
        mats.append(h)
    t0 = time.perf_counter()
    acc = 0.0
    for h in mats:
        vals, _ = _kernels.eigh(h, 8)
        acc += vals[0]
    dt = time.perf_counter() - t0
    assert math.isfinite(acc)
    return dt


def bench_poisson(n_draws: int) -> float:
    rng = _kernels.Rng(13, 0)
    t0 = time.perf_counter()
    acc = 0
    for k in range(n_draws):
        acc += rng.poisson(666.6)
        acc += rng.poisson(7.5)
    dt = time.perf_counter() - t0
    assert acc > 0
    return dt


def bench_mle_cost(n_evals: int) -> float:
    cfg = InterferometerConfig.balanced(IdlerStateParams(0.3, 1.2, 0.9))
    plan_h = ScanPlan.default_grid("H", seed=1, counts_per_point=1000)
    plan_v = ScanPlan.default_grid("V", seed=1, counts_per_point=1000)
    scan_h = run_scan(cfg, plan_h)
    scan_v = run_scan(cfg, plan_v)
    candidates = [IdlerStateParams(0.05 + 0.9 * (k % 97) / 97,
                                   6.28 * (k % 89) / 89,
                                   0.05 + 0.9 * (k % 83) / 83)
                  for k in range(n_evals)]
    t0 = time.perf_counter()
    acc = 0.0
    for cand in candidates:
        acc += mle_cost(scan_h, scan_v, cand, 1.0, 1.0)
    dt = time.perf_counter() - t0
    assert acc > 0
    return dt


BENCHES = [
    ("exact matrix-pipeline rates", bench_exact_rates, "configs"),
    ("8x8 Jacobi eigensolve", bench_eigh, "eigs"),
    ("Poisson draws (2 per unit)", bench_poisson, "draws"),
    ("fringe-model cost", bench_mle_cost, "costs"),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=int, default=2000)
    ap.add_argument("--eigs", type=int, default=2000)
    ap.add_argument("--draws", type=int, default=200000)
    ap.add_argument("--costs", type=int, default=20000)
    args = ap.parse_args()

    backends = _kernels.available_backends()
    if "fast" not in backends:
        print("note: compiled backend unavailable; timing pure only")
    header = f"{'benchmark':<30} {'size':>8}"
    for b in backends:
        header += f" {b + ' [s]':>12}"
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, fn, argname in BENCHES:
        size = getattr(args, argname)
        times = {}
        for b in backends:
            _kernels.use(b)
            times[b] = fn(size)
        row = f"{name:<30} {size:>8}"
        for b in backends:
            row += f" {times[b]:>12.4f}"
        if "fast" in times and "pure" in times:
            row += f" {times['pure'] / times['fast']:>8.1f}x"
        print(row)
    _kernels.use("fast" if "fast" in backends else "pure")


if __name__ == "__main__":
    main()

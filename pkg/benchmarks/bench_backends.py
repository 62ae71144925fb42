#!/usr/bin/env python3
"""Timing comparison of the compiled and pure-Python kernel backends.

Runs each representative kernel under both backends (best of ``--repeat``
passes) and prints a table with the speedup.  Outputs are also compared
bit-for-bit, so the benchmark doubles as a smoke test.

Usage: python benchmarks/bench_backends.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from skewlab import backend
from skewlab.backend import forced, kernels
from skewlab.dynamics import (GOLDEN_MEAN, SkewShiftDriver, SkewShiftParams,
                              named_potential)


def _workloads():
    p = named_potential("cosine")
    cre, cim = p.kernel_arrays()
    rng = np.random.default_rng(0)
    phases_long = rng.random(20_000)
    diag_long = rng.uniform(-4.0, 4.0, 20_000)
    diag_eig = rng.uniform(-4.0, 4.0, 512)
    xs = rng.random(512)
    shifts = SkewShiftDriver(
        SkewShiftParams(2, GOLDEN_MEAN, (0.0, 0.37))).phases(1, 200)
    ns = np.array([2_500, 5_000, 10_000, 20_000])
    return [
        ("transfer_product (n=20k)",
         lambda k: k.transfer_product(diag_long, 0.4)),
        ("transfer_u_checkpoints (n=20k)",
         lambda k: k.transfer_u_checkpoints(diag_long, 0.4, ns)),
        ("profile_u (512 x 200)",
         lambda k: k.profile_u(xs, shifts, 8.0, 0.9, cre, cim)),
        ("continuant_logs (n=20k)",
         lambda k: k.continuant_logs(diag_long, 0.4)),
        ("eigenvalues_bisect (N=512)",
         lambda k: k.eigenvalues_bisect(diag_eig, 1e-13 * 6.0)),
        ("weyl_sum (N=100k)",
         lambda k: k.weyl_sum(3, 0.21, GOLDEN_MEAN, 100_000)),
        ("eval_potential (n=20k)",
         lambda k: k.eval_potential(phases_long, cre, cim)),
    ]


def _best_time(fn, repeat: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(kernels())
        best = min(best, time.perf_counter() - t0)
    return best, result


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return bool(np.array_equal(a, np.asarray(b)))
    return a == b


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5,
                        help="passes per kernel; best time wins")
    args = parser.parse_args()
    names = backend.available()
    if "compiled" not in names:
        print("compiled backend not built; nothing to compare")
        return 1
    print(f"backends: {', '.join(names)} (active: {backend.active_name()})")
    header = f"{'kernel':35s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, fn in _workloads():
        with forced("python"):
            t_py, r_py = _best_time(fn, args.repeat)
        with forced("compiled"):
            t_c, r_c = _best_time(fn, args.repeat)
        match = "" if _same(r_py, r_c) else "  MISMATCH"
        print(f"{name:35s} {t_py * 1e3:9.2f}ms {t_c * 1e3:9.2f}ms "
              f"{t_py / t_c:7.1f}x{match}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

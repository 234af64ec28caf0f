#!/usr/bin/env python3
"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Numba compile time is excluded by a warm-up call. Run without
SWNC_NO_NUMBA set, otherwise both columns time plain Python/numpy.
"""
import argparse
import time

import numpy as np

from swnc import kernels
from swnc._accel import HAS_NUMBA
from swnc.engine import SimConfig, run_experience
from swnc.channel import GEParams
from swnc.gf import INV, MUL


def best_of(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def decode_all(insert, n, length, rng):
    coef = np.zeros((n, n), np.uint8)
    pay = np.zeros((n, length), np.uint8)
    piv = np.zeros(n, np.bool_)
    rows = rng.integers(0, 256, (n + 4, n), dtype=np.uint8)
    pays = rng.integers(0, 256, (n + 4, length), dtype=np.uint8)
    for r in range(rows.shape[0]):
        insert(coef, pay, piv, rows[r].copy(), pays[r].copy(), MUL, INV)


def cases(rng):
    coeffs = rng.integers(1, 256, 32, dtype=np.uint8)
    payloads = rng.integers(0, 256, (32, 1000), dtype=np.uint8)
    u1, u2 = rng.random(1_000_000), rng.random(1_000_000)
    return {
        "combine 32x1000B": (
            lambda: kernels.combine_nb(coeffs, payloads, MUL),
            lambda: kernels.combine_np(coeffs, payloads, MUL)),
        "decode 32 rows x 1000B": (
            lambda: decode_all(kernels.insert_row_nb, 32, 1000, np.random.default_rng(1)),
            lambda: decode_all(kernels.insert_row_np, 32, 1000, np.random.default_rng(1))),
        "decode 100 rows x 1000B": (
            lambda: decode_all(kernels.insert_row_nb, 100, 1000, np.random.default_rng(2)),
            lambda: decode_all(kernels.insert_row_np, 100, 1000, np.random.default_rng(2))),
        "GE chain 1e6 slots": (
            lambda: kernels.ge_chain_nb(u1, u2, False, 0.17, 0.019, 0.0, 1.0),
            lambda: kernels.ge_chain_np(u1, u2, False, 0.17, 0.019, 0.0, 1.0)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba unavailable or disabled; the numba column runs as plain Python")
    print(f"{'kernel':<26} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, (nb, np_) in cases(np.random.default_rng(0)).items():
        a, b = best_of(nb, args.repeat), best_of(np_, args.repeat)
        print(f"{name:<26} {a * 1e3:>10.3f} {b * 1e3:>10.3f} {b / a:>7.1f}x")
    cfg = SimConfig(scheme="aswrlnc", ge=GEParams(0.17, 0.019))
    t = best_of(lambda: run_experience(cfg, seed=0), args.repeat)
    print(f"{'A-SW experience (active)':<26} {t * 1e3:>10.3f}")


if __name__ == "__main__":
    main()

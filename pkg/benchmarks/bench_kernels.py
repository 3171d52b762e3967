"""Time the jit-compiled kernels against their pure-numpy fallbacks.

Both implementations live in one process (stylener.kernels keeps the plain
versions reachable as *_py), so one run gives a fair side-by-side. Run with
STYLENER_NUMBA=0 to confirm the fallback path is what you would get without
numba; the script then times a single column.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --repeats 20 --seed 1
"""

import argparse
import time

import numpy as np

from stylener import kernels


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_levenshtein(rng, repeats):
    rows = []
    for n in (64, 256, 1024):
        a = rng.integers(0, 30, size=n).astype(np.int32)
        b = rng.integers(0, 30, size=n).astype(np.int32)
        jit_t = best_of(kernels.levenshtein, (a, b), repeats)
        py_t = best_of(kernels.levenshtein_py, (a, b), repeats)
        rows.append((f"levenshtein n={n}", jit_t, py_t))
    return rows


def gru_inputs(rng, steps, dim):
    X = rng.normal(size=(steps, dim))
    h0 = rng.normal(size=dim)
    mats = [rng.normal(size=(dim, dim)) * 0.1 for _ in range(6)]
    biases = [np.zeros(dim) for _ in range(3)]
    Wz, Uz, Wr, Ur, Wh, Uh = mats
    bz, br, bh = biases
    return X, h0, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh


def bench_gru(rng, repeats):
    rows = []
    for steps, dim in ((32, 32), (64, 64), (128, 128)):
        args = gru_inputs(rng, steps, dim)
        jit_t = best_of(kernels.gru_forward, args, repeats)
        py_t = best_of(kernels.gru_forward_py, args, repeats)
        rows.append((f"gru_forward {steps}x{dim}", jit_t, py_t))

        X, h0, Wz, Uz, _, Wr, Ur, _, Wh, Uh, _ = args
        H, Z, R, C = kernels.gru_forward(*args)
        dH = rng.normal(size=H.shape)
        dh_last = rng.normal(size=dim)
        back = (X, h0, H, Z, R, C, dH, dh_last, Wz, Uz, Wr, Ur, Wh, Uh)
        jit_t = best_of(kernels.gru_backward, back, repeats)
        py_t = best_of(kernels.gru_backward_py, back, repeats)
        rows.append((f"gru_backward {steps}x{dim}", jit_t, py_t))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=10, help="best-of-N timing")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    kernels.warmup()  # pay jit compilation before any timer starts

    rows = bench_levenshtein(rng, args.repeats) + bench_gru(rng, args.repeats)

    if not kernels.NUMBA_ENABLED:
        print("numba disabled (STYLENER_NUMBA=0 or not installed); single path\n")
        print(f"{'kernel':<24} {'numpy':>12}")
        for name, _, py_t in rows:
            print(f"{name:<24} {py_t * 1e3:>10.3f}ms")
        return

    print(f"{'kernel':<24} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for name, jit_t, py_t in rows:
        print(
            f"{name:<24} {jit_t * 1e3:>10.3f}ms {py_t * 1e3:>10.3f}ms "
            f"{py_t / jit_t:>8.1f}x"
        )


if __name__ == "__main__":
    main()

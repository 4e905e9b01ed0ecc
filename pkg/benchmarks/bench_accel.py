"""Timing comparison of the compiled accel kernels against pure numpy.

Runs each kernel (Walsh-Hadamard rows, sin/cos interleave, pairwise
squared distances) on random inputs with both backends, reports the
speedup, and checks that the outputs agree.

Usage: python3 benchmarks/bench_accel.py [--rows 2048] [--dim 1024] [--reps 20]
"""

import argparse
import time

import numpy as np

from samkl import accel


def _time(fn, reps):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(name, nb_fn, np_fn, check, reps):
    if not accel.HAS_NUMBA:
        print(f"{name}: numba unavailable, skipping comparison")
        return
    nb_fn()  # warm-up triggers compilation outside the timed region
    t_nb = _time(nb_fn, reps)
    t_np = _time(np_fn, reps)
    diff = check()
    print(f"{name}: numpy {t_np * 1e3:8.3f} ms | numba {t_nb * 1e3:8.3f} ms | "
          f"Speedup: {t_np / t_nb:.2f}x | max diff {diff:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=2048)
    ap.add_argument("--dim", type=int, default=1024)
    ap.add_argument("--reps", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    rows, dim = args.rows, args.dim
    print(f"active backend: {accel.backend()}  (rows={rows}, dim={dim})")

    a = rng.standard_normal((rows, dim))

    def fwht_out(fn):
        buf = a.copy()
        fn(buf)
        return buf

    bench(
        "fwht_rows",
        lambda: accel._fwht_rows_nb(a.copy()),
        lambda: accel._fwht_rows_np(a.copy()),
        lambda: float(np.max(np.abs(fwht_out(accel._fwht_rows_nb)
                                    - fwht_out(accel._fwht_rows_np)))),
        args.reps,
    )

    z = rng.standard_normal((rows, dim))
    bench(
        "interleave_sincos",
        lambda: accel._interleave_sincos_nb(z, 0.125),
        lambda: accel._interleave_sincos_np(z, 0.125),
        lambda: float(np.max(np.abs(accel._interleave_sincos_nb(z, 0.125)
                                    - accel._interleave_sincos_np(z, 0.125)))),
        args.reps,
    )

    x = rng.standard_normal((rows // 4, 32))
    y = rng.standard_normal((rows // 4, 32))
    bench(
        "pairwise_sq_dists",
        lambda: accel._pairwise_sq_dists_nb(x, y),
        lambda: accel._pairwise_sq_dists_np(x, y),
        lambda: float(np.max(np.abs(accel._pairwise_sq_dists_nb(x, y)
                                    - accel._pairwise_sq_dists_np(x, y)))),
        args.reps,
    )


if __name__ == "__main__":
    main()

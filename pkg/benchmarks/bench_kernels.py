#!/usr/bin/env python3
"""Side-by-side benchmark: numpy lane vs numba lane for the hot kernels.

Covers the three scan-shaped workloads behind retrieval and scoring:
  * dot_scores     - full-index cosine scan (one query)
  * mmr_select     - greedy MMR over a candidate pool
  * pairwise_max   - token-match maxima for greedy BERTScore

Run:  python benchmarks/bench_kernels.py
The active lane for library calls is controlled by QF_KERNELS; this script
always times both lanes directly and checks they agree.
"""

import time

import numpy as np

from questfill import kernels

if not kernels._NUMBA_OK:
    raise SystemExit("numba unavailable; nothing to compare (QF_KERNELS=numpy?)")


def timeit(fn, *args, repeat=5):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def unit_rows(rng, n, dim):
    rows = rng.normal(size=(n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def main():
    rng = np.random.default_rng(42)

    print("Warming up JIT (first call compiles; not timed)...")
    t0 = time.perf_counter()
    kernels.warmup()
    print(f"warmup: {time.perf_counter() - t0:.1f}s\n")

    header = f"{'kernel':<14} {'workload':<22} {'numpy (ms)':>11} {'numba (ms)':>11} {'speedup':>8}  agree"
    print(header)
    print("-" * len(header))

    for n, dim in [(20_000, 128), (100_000, 256), (400_000, 384)]:
        matrix = unit_rows(rng, n, dim)
        query = unit_rows(rng, 1, dim)[0]
        t_np, r_np = timeit(kernels.np_dot_scores, matrix, query)
        t_nb, r_nb = timeit(kernels.nb_dot_scores, matrix, query)
        agree = np.allclose(r_np, r_nb, atol=1e-9)
        print(f"{'dot_scores':<14} {f'n={n} d={dim}':<22} {t_np * 1e3:>11.2f} "
              f"{t_nb * 1e3:>11.2f} {t_np / t_nb:>7.2f}x  {'ok' if agree else 'FAIL'}")

    for pool, dim, k in [(256, 256, 32), (1024, 384, 64)]:
        cand = unit_rows(rng, pool, dim)
        qsims = rng.uniform(-1, 1, size=pool)
        t_np, r_np = timeit(kernels.np_mmr_select, cand, qsims, 0.5, k)
        t_nb, r_nb = timeit(kernels.nb_mmr_select, cand, qsims, 0.5, k)
        agree = (list(r_np[0]) == list(r_nb[0])
                 and np.allclose(r_np[1], r_nb[1], atol=1e-9))
        print(f"{'mmr_select':<14} {f'pool={pool} d={dim} k={k}':<22} {t_np * 1e3:>11.2f} "
              f"{t_nb * 1e3:>11.2f} {t_np / t_nb:>7.2f}x  {'ok' if agree else 'FAIL'}")

    for n, m, dim in [(200, 200, 256), (600, 600, 384)]:
        a = unit_rows(rng, n, dim)
        b = unit_rows(rng, m, dim)
        t_np, r_np = timeit(kernels.np_pairwise_max, a, b)
        t_nb, r_nb = timeit(kernels.nb_pairwise_max, a, b)
        agree = (np.allclose(r_np[0], r_nb[0], atol=1e-9)
                 and np.allclose(r_np[1], r_nb[1], atol=1e-9))
        print(f"{'pairwise_max':<14} {f'{n}x{m} d={dim}':<22} {t_np * 1e3:>11.2f} "
              f"{t_nb * 1e3:>11.2f} {t_np / t_nb:>7.2f}x  {'ok' if agree else 'FAIL'}")

    print(f"\nactive lane for library calls: {kernels.active_backend()} "
          f"(set QF_KERNELS=numpy|numba|auto to switch)")


if __name__ == "__main__":
    main()

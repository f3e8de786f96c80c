"""Benchmark the compiled kernels against the pure-numpy fallbacks.

Run as: python benchmarks/kernel_bench.py
"""

import time

import numpy as np

from mixlinreg import _pykernels

try:
    from mixlinreg import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eigh(d):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((d, d))
    A = (A + A.T) / 2
    rows = [("eigh_full", f"d={d}")]
    t_py = timeit(_pykernels.eigh_full, A)
    rows.append(("  numpy (LAPACK)", f"{t_py * 1e3:9.2f} ms"))
    if _ckernels is not None:
        t_c = timeit(_ckernels.eigh_full, A)
        rows.append(("  cython (cyclic Jacobi)", f"{t_c * 1e3:9.2f} ms"))
        wc, Vc = _ckernels.eigh_full(A)
        wp, _ = _pykernels.eigh_full(A)
        assert np.allclose(wc, wp, atol=1e-9)
    return rows


def bench_pairwise(n, L, k):
    rng = np.random.default_rng(1)
    g1 = rng.standard_normal((n, L, k))
    g2 = rng.standard_normal((n, L, k))
    rows = [("pairwise_median_inner", f"n={n}, L={L}, k={k}")]
    t_py = timeit(_pykernels.pairwise_median_inner, g1, g2)
    rows.append(("  numpy broadcast", f"{t_py * 1e3:9.2f} ms"))
    if _ckernels is not None:
        t_c = timeit(_ckernels.pairwise_median_inner, g1, g2)
        rows.append(("  cython pair loop", f"{t_c * 1e3:9.2f} ms"))
    return rows


def bench_linkage(n, k):
    rng = np.random.default_rng(2)
    H = rng.standard_normal((n, n))
    H = (H + H.T) / 2
    np.fill_diagonal(H, 0.0)
    iu, ju = np.triu_indices(n, 1)
    order = np.lexsort((ju, iu, H[iu, ju]))
    ei, ej = iu[order], ju[order]
    rows = [("union_find_merge", f"n={n}, k={k}")]
    t_py = timeit(_pykernels.union_find_merge, ei, ej, n, k)
    rows.append(("  python union-find", f"{t_py * 1e3:9.2f} ms"))
    if _ckernels is not None:
        t_c = timeit(_ckernels.union_find_merge, ei, ej, n, k)
        rows.append(("  cython union-find", f"{t_c * 1e3:9.2f} ms"))
    return rows


def main():
    if _ckernels is None:
        print("compiled kernels not built; timing fallbacks only\n")
    blocks = [
        bench_eigh(128),
        bench_eigh(256),
        bench_pairwise(256, 10, 16),
        bench_pairwise(512, 13, 32),
        bench_linkage(256, 16),
        bench_linkage(1024, 32),
    ]
    for rows in blocks:
        head, spec = rows[0]
        print(f"{head}  [{spec}]")
        for name, val in rows[1:]:
            print(f"{name:28s} {val}")
        print()


if __name__ == "__main__":
    main()

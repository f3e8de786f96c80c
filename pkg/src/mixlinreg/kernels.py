"""Kernel backend selection.

The loop-bound kernels (pairwise median distances, union-find merging) use
the compiled extension when built and the numpy fallbacks otherwise;
``BACKEND`` reports which is active. The symmetric eigendecomposition
always routes through LAPACK: benchmarking (``benchmarks/kernel_bench.py``)
shows the compiled cyclic-Jacobi sweep losing to LAPACK by two orders of
magnitude at the matrix sizes this package touches, so the Jacobi kernel
is kept only as an alternative implementation (``jacobi_eigh``) for
cross-checks and the benchmark.
"""

from __future__ import annotations

import numpy as np

from . import _pykernels

try:
    from . import _ckernels as _impl
except ImportError:  # pragma: no cover - build-env dependent
    _impl = _pykernels

BACKEND = _impl.BACKEND


def eigh_full(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full symmetric eigendecomposition (LAPACK), eigenvalues ascending."""
    return np.linalg.eigh(A)


# compiled cyclic-Jacobi alternative; None when the extension is not built
jacobi_eigh = None if _impl is _pykernels else _impl.eigh_full

pairwise_median_inner = _impl.pairwise_median_inner
union_find_merge = _impl.union_find_merge

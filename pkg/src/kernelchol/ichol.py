"""Zero-fill-in incomplete Cholesky and end-to-end factorization drivers.

ichol0 keeps exactly the lower-triangular sparsity pattern of its input: each
stored column is scaled by the square root of its pivot, then the outer-product
update is applied only to positions already present in the pattern. A pivot
that is not strictly positive zeroes its column and is recorded; the factor
stays usable with rank = n - (#zeroed columns).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import PointCloud
from .kernels import KernelSpec, SparseSymmetric, assemble
from .ordering import (MaximinOrdering, SparsityPattern, maximin_fast,
                       min_rule_pattern)


@dataclass(frozen=True)
class SparseLowerFactor:
    """Lower-triangular factor on a fixed pattern, with pivot bookkeeping."""

    pattern: SparsityPattern
    values: np.ndarray
    perm: np.ndarray
    zeroed: np.ndarray  # order positions whose pivot was <= 0

    @property
    def n(self) -> int:
        return self.pattern.n

    @property
    def rank(self) -> int:
        return self.pattern.n - self.zeroed.shape[0]

    def to_csc(self):
        from scipy.sparse import csc_matrix
        return csc_matrix((self.values, self.pattern.rowidx, self.pattern.colptr),
                          shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        return self.to_csc().toarray()


@njit(cache=True)
def _ichol0_core(colptr, rowidx, values):
    """Right-looking incomplete Cholesky in place. Requires each column's
    row indices sorted ascending with the diagonal first. Returns zeroed
    order positions."""
    n = colptr.shape[0] - 1
    # column position of each row entry, for O(1) scatter lookups
    colpos = np.full(n, -1, dtype=np.int64)
    zeroed = np.empty(n, dtype=np.int64)
    nz = 0
    for j in range(n):
        start = colptr[j]
        end = colptr[j + 1]
        piv = values[start]
        if piv <= 0.0:
            for t in range(start, end):
                values[t] = 0.0
            zeroed[nz] = j
            nz += 1
            continue
        piv = np.sqrt(piv)
        values[start] = piv
        for t in range(start + 1, end):
            values[t] /= piv
        # scatter the column, then update each later column k in the pattern
        for t in range(start + 1, end):
            colpos[rowidx[t]] = t
        for t in range(start + 1, end):
            k = rowidx[t]
            ljk = values[t]
            for s in range(colptr[k], colptr[k + 1]):
                pos = colpos[rowidx[s]]
                if pos >= 0:
                    values[s] -= ljk * values[pos]
        for t in range(start + 1, end):
            colpos[rowidx[t]] = -1
    return zeroed[:nz]


def ichol0(matrix: SparseSymmetric) -> SparseLowerFactor:
    """Incomplete Cholesky with zero fill-in on the matrix's own pattern."""
    pat = matrix.pattern
    values = matrix.values.copy()
    zeroed = _ichol0_core(pat.colptr, pat.rowidx, values)
    return SparseLowerFactor(pat, values, matrix.perm.copy(), zeroed)


def dense_cholesky(a: np.ndarray) -> np.ndarray:
    """Textbook lower Cholesky, used as the correctness oracle in tests."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("input must be a square matrix")
    n = a.shape[0]
    l = np.zeros_like(a)
    for j in range(n):
        piv = a[j, j] - l[j, :j] @ l[j, :j]
        if piv <= 0.0:
            raise np.linalg.LinAlgError(
                f"nonpositive pivot {piv:.6e} at column {j}; matrix is not "
                "positive definite to working precision")
        l[j, j] = np.sqrt(piv)
        l[j + 1:, j] = (a[j + 1:, j] - l[j + 1:, :j] @ l[j, :j]) / l[j, j]
    return l


@dataclass(frozen=True)
class FactorTimings:
    t_order: float
    t_entries: float
    t_ichol: float


def factor_kernel(cloud: PointCloud, spec: KernelSpec, rho: float,
                  mode: str = "maximin"):
    """Order, assemble, and factor a kernel matrix.

    mode "maximin" uses the plain coarse-to-fine ordering; "supernodal"
    additionally reorders within length scales for cache-friendly columns.
    Returns (factor, ordering, timings).
    """
    t0 = time.perf_counter()
    ordering, pattern = maximin_fast(cloud, rho)
    if mode == "maximin":
        perm = ordering.perm
        plan = None
    elif mode == "supernodal":
        from .supernodal import build_supernodal
        plan = build_supernodal(ordering, cloud, rho)
        pattern = plan.pattern
        perm = plan.perm
    else:
        raise ValueError(f"unknown factorization mode: {mode!r}")
    t1 = time.perf_counter()
    matrix = assemble(cloud, spec, pattern, perm)
    t2 = time.perf_counter()
    factor = ichol0(matrix)
    t3 = time.perf_counter()
    result_ordering = plan if plan is not None else ordering
    return factor, result_ordering, FactorTimings(t1 - t0, t2 - t1, t3 - t2)


def factor_precision(matrix: np.ndarray, cloud: PointCloud, rho: float):
    """Factor a dense precision (inverse-covariance) matrix.

    Uses the reversed coarse-to-fine ordering with the min-length-scale
    pattern, which is where precision matrices of smooth kernels are
    approximately sparse. Returns (factor, ordering); the factor satisfies
    matrix[perm_rev][:, perm_rev] ~ L L^T with perm_rev the reversed ordering.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (cloud.n, cloud.n):
        raise ValueError("matrix shape inconsistent with cloud")
    ordering, _ = maximin_fast(cloud, rho)
    pattern = min_rule_pattern(ordering, cloud, rho)
    perm_rev = ordering.perm[::-1].copy()
    permuted = matrix[np.ix_(perm_rev, perm_rev)]
    values = np.empty(pattern.nnz)
    for j in range(pattern.n):
        rows = pattern.rowidx[pattern.colptr[j]:pattern.colptr[j + 1]]
        values[pattern.colptr[j]:pattern.colptr[j + 1]] = permuted[rows, j]
    sym = SparseSymmetric(pattern, values, perm_rev)
    return ichol0(sym), ordering

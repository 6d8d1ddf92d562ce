"""Accuracy metrics: sampled and exact relative Frobenius error, and the
point-distribution homogeneity diagnostic delta.

The sampled error draws m random matrix entries, evaluates the exact kernel
and the exact (L L^T) entry for each (sparse row dot products, no dense
matrices), and reports sqrt(sum of squared deviations) over sqrt(sum of
squared kernel values), repeated over independent draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .geometry import BoundaryKind, PointCloud, dist_to_boundary
from .ichol import SparseLowerFactor
from .kernels import KernelSpec, kernel_eval

ORACLE_CAP = 4000
CSV_HEADER = ("N,d,kernel,rho,nnz,rank,t_order,t_entries,t_ichol,"
              "E_mean,E_std,Ebar_mean,Ebar_std")


@dataclass(frozen=True)
class ErrorReport:
    mean_E: float
    std_E: float
    m: int
    interior: bool
    seed: int


@njit(cache=True)
def _row_dots(indptr, indices, data, rows_i, rows_j):
    """(L L^T)_{ij} = <row i of L, row j of L> for each sampled pair,
    via sorted-index merge."""
    m = rows_i.shape[0]
    out = np.empty(m)
    for t in range(m):
        i = rows_i[t]
        j = rows_j[t]
        a = indptr[i]
        ae = indptr[i + 1]
        b = indptr[j]
        be = indptr[j + 1]
        s = 0.0
        while a < ae and b < be:
            ca = indices[a]
            cb = indices[b]
            if ca == cb:
                s += data[a] * data[b]
                a += 1
                b += 1
            elif ca < cb:
                a += 1
            else:
                b += 1
        out[t] = s
    return out


def sampled_frobenius_error(factor: SparseLowerFactor, cloud: PointCloud,
                            spec: KernelSpec, m: int | None = None,
                            reps: int = 50, seed: int = 0,
                            interior: bool = False) -> ErrorReport:
    """Monte-Carlo relative Frobenius error of L L^T against the kernel."""
    n = cloud.n
    if m is None:
        m = min(500_000, n * n)
    if m < 1:
        raise ValueError("m must be >= 1")
    if interior:
        inside = np.all((cloud.coords >= 0.05) & (cloud.coords <= 0.95), axis=1)
        candidates = np.flatnonzero(inside)
        if candidates.size == 0:
            raise ValueError("no points inside [0.05, 0.95]^d")
    else:
        candidates = np.arange(n)
    csr = factor.to_csc().tocsr()
    csr.sort_indices()
    rank = np.empty(n, dtype=np.int64)
    rank[factor.perm] = np.arange(n)
    rng = np.random.Generator(np.random.PCG64(seed))
    errs = np.empty(reps)
    for rep in range(reps):
        ii = candidates[rng.integers(0, candidates.size, m)]
        jj = candidates[rng.integers(0, candidates.size, m)]
        diff = cloud.coords[ii] - cloud.coords[jj]
        r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        theta = kernel_eval(spec, r)
        if spec.nugget:
            theta = theta + np.where(ii == jj, spec.nugget, 0.0)
        approx = _row_dots(csr.indptr, csr.indices, csr.data,
                           rank[ii], rank[jj])
        errs[rep] = np.sqrt(np.sum((approx - theta) ** 2)
                            / np.sum(theta ** 2))
    return ErrorReport(float(errs.mean()), float(errs.std()), m, interior, seed)


def exact_frobenius_error(factor: SparseLowerFactor, theta: np.ndarray,
                          cap: int = ORACLE_CAP) -> float:
    """||L L^T - Theta||_F / ||Theta||_F, dense; theta in original order."""
    n = factor.n
    if n > cap:
        raise ValueError(f"N={n} exceeds the dense oracle cap {cap}")
    if theta.shape != (n, n):
        raise ValueError("theta shape mismatch")
    l = factor.dense()
    approx = l @ l.T
    perm = factor.perm
    theta_perm = theta[np.ix_(perm, perm)]
    return float(np.linalg.norm(approx - theta_perm) / np.linalg.norm(theta_perm))


def homogeneity_delta(cloud: PointCloud, grid: int = 64) -> float:
    """min_i dist(x_i, others + boundary) over the largest empty-ball radius,
    the latter approximated on a regular grid of candidate centers."""
    if cloud.n < 2:
        raise ValueError("need at least 2 points")
    tree = cKDTree(cloud.coords)
    nn = tree.query(cloud.coords, k=2)[0][:, 1]
    bdry = np.array([dist_to_boundary(cloud, i) for i in range(cloud.n)])
    numer = float(np.minimum(nn, bdry).min())

    if cloud.boundary.kind is BoundaryKind.UNIT_BOX:
        lo = np.zeros(cloud.dim)
        hi = np.ones(cloud.dim)
    else:
        lo = cloud.coords.min(axis=0)
        hi = cloud.coords.max(axis=0)
    axes = [np.linspace(lo[a], hi[a], grid) for a in range(cloud.dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, cloud.dim)
    empty = tree.query(mesh)[0]
    if cloud.boundary.kind is BoundaryKind.UNIT_BOX:
        to_wall = np.minimum(mesh, 1.0 - mesh).min(axis=1)
        empty = np.minimum(empty, to_wall)
    denom = float(empty.max())
    return numer / denom if denom > 0 else 1.0


def csv_row(n: int, d: int, kernel: str, rho: float, nnz: int, rank: int,
            t_order: float, t_entries: float, t_ichol: float,
            full: ErrorReport | None, interior: ErrorReport | None) -> str:
    def fmt(r):
        return (f"{r.mean_E:.6e},{r.std_E:.6e}" if r is not None else ",")
    return (f'{n},{d},"{kernel}",{rho:g},{nnz},{rank},'
            f"{t_order:.4f},{t_entries:.4f},{t_ichol:.4f},"
            f"{fmt(full)},{fmt(interior)}")

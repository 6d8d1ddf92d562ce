"""Binary and CSV serialization for point clouds, orderings, factors, and
vectors. All binary formats are little-endian with 4-byte ASCII magics.

KPTS: "KPTS", u32 version=1, u64 N, u32 d, f64 coords row-major.
KORD: "KORD", u64 N, u64 perm[N], f64 lengths[N], u64 colptr[N+1],
      u64 rowidx[nnz]; optional supernodal section flagged by u32 1:
      u32 levels[N], u64 assignment[N], u64 S, u32 colors[S].
KCHL: "KCHL", u64 N, u64 perm[N], u64 colptr[N+1], u64 rowidx[nnz],
      f64 values[nnz], u64 rank.
KVEC: "KVEC", u64 N, f64 values[N].
"""

from __future__ import annotations

import struct

import numpy as np

from .geometry import BoundaryPolicy, PointCloud
from .ichol import SparseLowerFactor
from .ordering import MaximinOrdering, SparsityPattern

_U32 = "<I"
_U64 = "<Q"


def _read_exact(fh, count):
    buf = fh.read(count)
    if len(buf) != count:
        raise ValueError("truncated file")
    return buf


def _read_u32(fh) -> int:
    return struct.unpack(_U32, _read_exact(fh, 4))[0]


def _read_u64(fh) -> int:
    return struct.unpack(_U64, _read_exact(fh, 8))[0]


def _read_array(fh, dtype, count) -> np.ndarray:
    dt = np.dtype(dtype)
    arr = np.frombuffer(_read_exact(fh, dt.itemsize * count), dtype=dt)
    return arr.copy()


def _expect_magic(fh, magic: bytes):
    got = _read_exact(fh, 4)
    if got != magic:
        raise ValueError(f"bad magic {got!r}, expected {magic!r}")


def write_points(path, cloud: PointCloud):
    with open(path, "wb") as fh:
        fh.write(b"KPTS")
        fh.write(struct.pack(_U32, 1))
        fh.write(struct.pack(_U64, cloud.n))
        fh.write(struct.pack(_U32, cloud.dim))
        fh.write(np.ascontiguousarray(cloud.coords, dtype="<f8").tobytes())


def read_points(path, boundary: BoundaryPolicy | None = None) -> PointCloud:
    with open(path, "rb") as fh:
        _expect_magic(fh, b"KPTS")
        version = _read_u32(fh)
        if version != 1:
            raise ValueError(f"unsupported KPTS version {version}")
        n = _read_u64(fh)
        d = _read_u32(fh)
        coords = _read_array(fh, "<f8", n * d).reshape(n, d)
    return PointCloud(coords, boundary or BoundaryPolicy.none())


def write_points_csv(path, cloud: PointCloud):
    np.savetxt(path, cloud.coords, delimiter=",", fmt="%.17g")


def read_points_csv(path, boundary: BoundaryPolicy | None = None) -> PointCloud:
    coords = np.loadtxt(path, delimiter=",", ndmin=2)
    return PointCloud(coords, boundary or BoundaryPolicy.none())


def write_ordering(path, ordering: MaximinOrdering, pattern: SparsityPattern,
                   plan=None):
    n = ordering.perm.shape[0]
    with open(path, "wb") as fh:
        fh.write(b"KORD")
        fh.write(struct.pack(_U64, n))
        fh.write(np.ascontiguousarray(ordering.perm, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(ordering.lengths, dtype="<f8").tobytes())
        fh.write(struct.pack(_U64, pattern.nnz))
        fh.write(np.ascontiguousarray(pattern.colptr, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(pattern.rowidx, dtype="<u8").tobytes())
        if plan is None:
            fh.write(struct.pack(_U32, 0))
        else:
            fh.write(struct.pack(_U32, 1))
            fh.write(np.ascontiguousarray(plan.levels, dtype="<u4").tobytes())
            fh.write(np.ascontiguousarray(plan.assignment, dtype="<u8").tobytes())
            fh.write(struct.pack(_U64, plan.n_supernodes))
            fh.write(np.ascontiguousarray(plan.colors, dtype="<u4").tobytes())


def read_ordering(path):
    """Returns (ordering, pattern, extras) where extras is None or a dict
    with keys levels, assignment, colors."""
    with open(path, "rb") as fh:
        _expect_magic(fh, b"KORD")
        n = _read_u64(fh)
        perm = _read_array(fh, "<u8", n).astype(np.int64)
        lengths = _read_array(fh, "<f8", n)
        nnz = _read_u64(fh)
        colptr = _read_array(fh, "<u8", n + 1).astype(np.int64)
        rowidx = _read_array(fh, "<u8", nnz).astype(np.int64)
        has_plan = _read_u32(fh)
        extras = None
        if has_plan:
            levels = _read_array(fh, "<u4", n).astype(np.int64)
            assignment = _read_array(fh, "<u8", n).astype(np.int64)
            s = _read_u64(fh)
            colors = _read_array(fh, "<u4", s).astype(np.int64)
            extras = {"levels": levels, "assignment": assignment,
                      "colors": colors}
    ordering = MaximinOrdering(perm, lengths)
    pattern = SparsityPattern(n, colptr, rowidx, rho=0.0, subcritical_rho=False)
    return ordering, pattern, extras


def write_factor(path, factor: SparseLowerFactor):
    pat = factor.pattern
    with open(path, "wb") as fh:
        fh.write(b"KCHL")
        fh.write(struct.pack(_U64, factor.n))
        fh.write(np.ascontiguousarray(factor.perm, dtype="<u8").tobytes())
        fh.write(struct.pack(_U64, pat.nnz))
        fh.write(np.ascontiguousarray(pat.colptr, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(pat.rowidx, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(factor.values, dtype="<f8").tobytes())
        fh.write(struct.pack(_U64, factor.rank))


def read_factor(path) -> SparseLowerFactor:
    with open(path, "rb") as fh:
        _expect_magic(fh, b"KCHL")
        n = _read_u64(fh)
        perm = _read_array(fh, "<u8", n).astype(np.int64)
        nnz = _read_u64(fh)
        colptr = _read_array(fh, "<u8", n + 1).astype(np.int64)
        rowidx = _read_array(fh, "<u8", nnz).astype(np.int64)
        values = _read_array(fh, "<f8", nnz)
        rank = _read_u64(fh)
    pattern = SparsityPattern(n, colptr, rowidx, rho=0.0, subcritical_rho=False)
    zeroed = np.flatnonzero(values[colptr[:-1]] == 0.0)
    if zeroed.shape[0] != n - rank:
        raise ValueError("stored rank inconsistent with zeroed pivots")
    return SparseLowerFactor(pattern, values, perm, zeroed)


def write_vector(path, v: np.ndarray):
    v = np.asarray(v, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(b"KVEC")
        fh.write(struct.pack(_U64, v.shape[0]))
        fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def read_vector(path) -> np.ndarray:
    with open(path, "rb") as fh:
        _expect_magic(fh, b"KVEC")
        n = _read_u64(fh)
        return _read_array(fh, "<f8", n)


def write_vector_text(path, v: np.ndarray):
    np.savetxt(path, np.asarray(v, dtype=np.float64), fmt="%.17g")


def read_vector_text(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=1)

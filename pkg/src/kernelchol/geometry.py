"""Point clouds, boundary-distance oracles, and deterministic dataset generators."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class BoundaryKind(enum.Enum):
    NONE = "none"
    UNIT_BOX = "unit_box"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class BoundaryPolicy:
    """How distance-to-boundary is measured for a point cloud.

    NONE means an empty boundary: every point is at distance +inf.
    UNIT_BOX measures distance to the faces of [0, 1]^d.
    EXPLICIT carries one precomputed nonnegative distance per point.
    """

    kind: BoundaryKind = BoundaryKind.NONE
    distances: np.ndarray | None = None

    @staticmethod
    def none() -> "BoundaryPolicy":
        return BoundaryPolicy(BoundaryKind.NONE)

    @staticmethod
    def unit_box() -> "BoundaryPolicy":
        return BoundaryPolicy(BoundaryKind.UNIT_BOX)

    @staticmethod
    def explicit(distances) -> "BoundaryPolicy":
        d = np.asarray(distances, dtype=np.float64)
        if d.ndim != 1:
            raise ValueError("explicit boundary distances must be a 1-D array")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("explicit boundary distances must be finite and >= 0")
        return BoundaryPolicy(BoundaryKind.EXPLICIT, d)


@dataclass(frozen=True)
class PointCloud:
    """Immutable N x d point set with a boundary-distance policy.

    Duplicate points (exact coordinate equality) are rejected: they make
    kernel matrices exactly singular, which is outside the pivot-zeroing
    policy used for near-singular inputs.
    """

    coords: np.ndarray
    boundary: BoundaryPolicy = field(default_factory=BoundaryPolicy.none)

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ValueError("coords must be an N x d array")
        n, d = coords.shape
        if n < 1 or d < 1:
            raise ValueError("need N >= 1 and d >= 1")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        # duplicate detection via lexicographic sort of rows
        order = np.lexsort(coords.T[::-1])
        srt = coords[order]
        if n > 1 and np.any(np.all(srt[1:] == srt[:-1], axis=1)):
            raise ValueError("duplicate points are not allowed")
        object.__setattr__(self, "coords", coords)
        b = self.boundary
        if b.kind is BoundaryKind.UNIT_BOX:
            if np.any(coords < 0) or np.any(coords > 1):
                raise ValueError("UNIT_BOX boundary requires coordinates in [0, 1]")
        elif b.kind is BoundaryKind.EXPLICIT:
            if b.distances is None or b.distances.shape != (n,):
                raise ValueError("explicit boundary needs exactly N distances")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


def pairwise_dist(cloud: PointCloud, i: int, j: int) -> float:
    """Euclidean distance between points i and j."""
    n = cloud.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"point index out of range (N={n})")
    diff = cloud.coords[i] - cloud.coords[j]
    return float(np.sqrt(np.dot(diff, diff)))


def dist_to_boundary(cloud: PointCloud, i: int) -> float:
    """Distance from point i to the domain boundary; +inf for an empty boundary."""
    if not (0 <= i < cloud.n):
        raise IndexError(f"point index out of range (N={cloud.n})")
    b = cloud.boundary
    if b.kind is BoundaryKind.NONE:
        return float("inf")
    if b.kind is BoundaryKind.UNIT_BOX:
        x = cloud.coords[i]
        return float(np.min(np.minimum(x, 1.0 - x)))
    return float(b.distances[i])


def boundary_distances(cloud: PointCloud) -> np.ndarray:
    """Vector of boundary distances for all points (inf sentinel for no boundary)."""
    b = cloud.boundary
    if b.kind is BoundaryKind.NONE:
        return np.full(cloud.n, np.inf)
    if b.kind is BoundaryKind.UNIT_BOX:
        c = cloud.coords
        return np.min(np.minimum(c, 1.0 - c), axis=1)
    return b.distances.copy()


def _rng(seed: int) -> np.random.Generator:
    # PCG64: a documented counter-based generator, fixed here for
    # cross-platform bit-for-bit reproducibility of the benchmarks.
    return np.random.Generator(np.random.PCG64(seed))


def gen_uniform(n: int, d: int, seed: int,
                boundary: BoundaryPolicy | None = None) -> PointCloud:
    """n i.i.d. uniform points in [0,1]^d, deterministic under seed."""
    if n < 1:
        raise ValueError("need n >= 1")
    if d < 1:
        raise ValueError("need d >= 1")
    coords = _rng(seed).random((n, d))
    return PointCloud(coords, boundary or BoundaryPolicy.none())


def gen_deformed_manifold(n: int, dz: float, seed: int,
                          noise: bool = True) -> PointCloud:
    """2-D uniform points lifted to a deformed surface in 3-D.

    x3 = -dz * sin(6 x1) * cos(2 (1 - x2)) + xi * 1e-3 with xi standard
    normal per point (the 1e-3 jitter magnitude is fixed, independent of dz).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = _rng(seed)
    xy = rng.random((n, 2))
    x3 = -dz * np.sin(6.0 * xy[:, 0]) * np.cos(2.0 * (1.0 - xy[:, 1]))
    if noise:
        x3 = x3 + rng.standard_normal(n) * 1e-3
    return PointCloud(np.column_stack([xy, x3]))

"""Supernodal multicolor reordering and lifted sparsity pattern.

Indices are bucketed into length-scale levels, aggregated into supernodes
(clusters around greedily chosen centers), and colored so that same-level
supernodes whose clusters interact never share a color. The final order
lists levels coarse to fine, colors consecutively within a level, and
supernode members contiguously; the lifted pattern connects every member
pair of interacting supernodes. Distances between levels k and l are
measured in the hierarchical pseudometric d(i,j) = h^{-min(k,l)} dist(x_i, x_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PointCloud
from .ordering import (MaximinOrdering, SparsityPattern, build_levels,
                       pattern_from_pairs)

DEFAULT_H = 0.5


@dataclass(frozen=True)
class SupernodalPlan:
    """Everything produced by the supernodal construction.

    Supernodes are numbered globally in level-major order; center/level/
    members are indexed by that number. assignment maps each original index
    to its supernode's center (an original index). aux_rows/aux_cols hold
    the supernode-interaction pairs (both directions deduplicated to
    lexicographic pairs) used to lift the pattern.
    """

    levels: np.ndarray          # per original index, 1-based level
    node_level: np.ndarray      # per supernode
    node_center: np.ndarray     # per supernode, original index of center
    members: tuple              # per supernode, array of original indices
    assignment: np.ndarray      # per original index, center original index
    colors: np.ndarray          # per supernode
    perm: np.ndarray            # order position -> original index
    pattern: SparsityPattern    # lifted lower-triangular pattern over perm
    aux_rows: np.ndarray = field(repr=False)
    aux_cols: np.ndarray = field(repr=False)
    rho: float = 0.0
    h: float = DEFAULT_H
    rho_pattern: float = 0.0  # widened interaction radius used for aux pairs

    @property
    def n(self) -> int:
        return self.levels.shape[0]

    @property
    def n_supernodes(self) -> int:
        return self.node_center.shape[0]

    def supernodes_by_level(self) -> dict:
        out: dict = {}
        for s in range(self.n_supernodes):
            out.setdefault(int(self.node_level[s]), []).append(s)
        return out


def _greedy_centers(coords, scan, radius):
    """Scan indices in the given order; accept a candidate as center unless
    an accepted center lies within `radius`. Returns accepted centers and,
    for speed, uses a tree over all scanned points to block covered ones."""
    tree = cKDTree(coords[scan])
    blocked = np.zeros(scan.shape[0], dtype=bool)
    centers = []
    for pos in range(scan.shape[0]):
        if blocked[pos]:
            continue
        centers.append(scan[pos])
        for nb in tree.query_ball_point(coords[scan[pos]], radius):
            blocked[nb] = True
    return np.asarray(centers, dtype=np.int64)


def _assign_nearest(coords, points, centers):
    """Nearest center for each point, ties to the lowest center index."""
    k = min(centers.shape[0], 8)
    tree = cKDTree(coords[centers])
    _, cand = tree.query(coords[points], k=k)
    cand = np.atleast_2d(cand.reshape(points.shape[0], k))
    # recompute candidate distances exactly so tie-breaking is well defined
    diff = coords[points][:, None, :] - coords[centers[cand]]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    cidx = centers[cand]
    best = np.empty(points.shape[0], dtype=np.int64)
    dmin = d2.min(axis=1)
    for i in range(points.shape[0]):
        ties = cand[i][d2[i] == dmin[i]]
        best[i] = centers[ties].min() if ties.size > 1 else cidx[i][int(np.argmin(d2[i]))]
    return best


def build_supernodal(ordering: MaximinOrdering, cloud: PointCloud, rho: float,
                     h: float = DEFAULT_H) -> SupernodalPlan:
    """Run the full supernodal construction for a maximin-ordered cloud."""
    if not np.isfinite(rho) or rho <= 0:
        raise ValueError("rho must be finite and positive")
    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    n = cloud.n
    levels = build_levels(ordering, h)
    rank = ordering.rank  # original index -> maximin position
    q = int(levels.max())

    node_level = []
    node_center = []
    members_per_node = []
    assignment = np.full(n, -1, dtype=np.int64)
    node_of = np.full(n, -1, dtype=np.int64)
    level_points = []
    for k in range(1, q + 1):
        pts = np.flatnonzero(levels == k)
        level_points.append(pts)
        if pts.size == 0:
            continue
        scan = pts[np.argsort(rank[pts])]  # maximin scan order within level
        # pseudodistance r on level k is Euclidean distance / h^k
        radius = rho * h ** k
        centers = _greedy_centers(cloud.coords, scan, radius)
        centers_sorted = np.sort(centers)
        assigned = _assign_nearest(cloud.coords, pts, centers_sorted)
        assignment[pts] = assigned
        base = len(node_center)
        node_id = {int(c): base + t for t, c in enumerate(centers_sorted)}
        for c in centers_sorted:
            node_level.append(k)
            node_center.append(int(c))
            members_per_node.append([])
        for p, c in zip(pts, assigned):
            s = node_id[int(c)]
            node_of[p] = s
            members_per_node[s].append(int(p))
    node_level = np.asarray(node_level, dtype=np.int64)
    node_center = np.asarray(node_center, dtype=np.int64)
    n_super = node_center.shape[0]

    # Auxiliary pattern: supernode pairs with some member pair at
    # pseudodistance <= rho_pattern, where rho_pattern widens rho by
    # l_ref / h (never below rho). A level-k length scale reaches
    # l_ref * h^(k-1), so this radius makes the lifted pattern contain every
    # length-scale pair dist <= rho * max(l_i, l_j); with the bare radius
    # rho the factor loses most of its accuracy to missing entries and
    # pivot breakdowns. Points with infinite length scale (empty boundary)
    # interact with everything, mirroring the dense first pattern column.
    ordered_l = ordering.lengths[ordering.perm]
    finite_l = ordered_l[np.isfinite(ordered_l)]
    l_ref = finite_l[0] if finite_l.size else 1.0
    rho_pattern = rho * max(1.0, l_ref / h)
    aux = set()
    for s in range(n_super):
        aux.add((s, s))
    for i in np.flatnonzero(~np.isfinite(ordering.lengths)):
        sa = node_of[i]
        for sb in range(n_super):
            aux.add((min(sa, sb), max(sa, sb)))
    trees = [cKDTree(cloud.coords[pts]) if pts.size else None
             for pts in level_points]
    for k in range(1, q + 1):
        if level_points[k - 1].size == 0:
            continue
        for l in range(k, q + 1):
            if level_points[l - 1].size == 0:
                continue
            radius = rho_pattern * h ** k  # min(k, l) = k
            hits = trees[k - 1].query_ball_tree(trees[l - 1], radius)
            pk = level_points[k - 1]
            pl = level_points[l - 1]
            for a, lst in enumerate(hits):
                sa = node_of[pk[a]]
                for b in lst:
                    sb = node_of[pl[b]]
                    aux.add((min(sa, sb), max(sa, sb)))
    aux_pairs = np.asarray(sorted(aux), dtype=np.int64)
    aux_rows, aux_cols = aux_pairs[:, 0], aux_pairs[:, 1]

    # greedy coloring per level in ascending center index (supernodes are
    # already numbered that way), lowest free color
    adj = [[] for _ in range(n_super)]
    for sa, sb in zip(aux_rows, aux_cols):
        if sa != sb and node_level[sa] == node_level[sb]:
            adj[sa].append(sb)
            adj[sb].append(sa)
    colors = np.full(n_super, -1, dtype=np.int64)
    for s in range(n_super):
        used = {colors[t] for t in adj[s] if colors[t] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[s] = c

    # final order: level, then color, then supernode id, members contiguous
    # sorted by maximin position
    members = tuple(np.asarray(sorted(m, key=lambda p: rank[p]), dtype=np.int64)
                    for m in members_per_node)
    node_order = sorted(range(n_super),
                        key=lambda s: (node_level[s], colors[s], s))
    perm = np.concatenate([members[s] for s in node_order])

    pattern = _lift(n, members, aux_rows, aux_cols, perm, rho)
    return SupernodalPlan(levels, node_level, node_center, members,
                          assignment, colors, perm, pattern,
                          aux_rows, aux_cols, float(rho), float(h),
                          float(rho_pattern))


def _lift(n, members, aux_rows, aux_cols, perm, rho):
    pos = np.empty(n, dtype=np.int64)
    pos[perm] = np.arange(n)
    rows_parts = []
    cols_parts = []
    for sa, sb in zip(aux_rows, aux_cols):
        ma = pos[members[sa]]
        mb = pos[members[sb]]
        rows_parts.append(np.repeat(ma, mb.shape[0]))
        cols_parts.append(np.tile(mb, ma.shape[0]))
    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    return pattern_from_pairs(n, rows, cols, rho=rho, subcritical=rho < 2.0)


def lift_pattern(plan: SupernodalPlan) -> SparsityPattern:
    """Rebuild the lifted pattern from the plan's supernode interactions."""
    return _lift(plan.n, plan.members, plan.aux_rows, plan.aux_cols,
                 plan.perm, plan.rho)

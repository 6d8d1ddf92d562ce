"""Maximin elimination ordering, length scales, and sparsity patterns.

Two routes compute the same ordering/pattern: a near-linear heap-based
construction (parent/children pruning over a mutable max-heap) and a
quadratic direct scan kept as a reference oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .geometry import PointCloud, boundary_distances

NAIVE_CAP = 5000


@dataclass(frozen=True)
class MaximinOrdering:
    """Greedy farthest-point ordering with its length scales.

    perm maps order position k to the original point index; rank is the
    inverse map. lengths[i] is the distance from point i to the boundary
    and all points ordered before it (original-index indexed; the first
    entry is +inf when the boundary is empty).
    """

    perm: np.ndarray
    lengths: np.ndarray
    rank: np.ndarray = field(init=False)

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        n = perm.shape[0]
        rank = np.empty(n, dtype=np.int64)
        rank[perm] = np.arange(n)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "rank", rank)

    @property
    def n(self) -> int:
        return self.perm.shape[0]

    def ordered_lengths(self) -> np.ndarray:
        """Length scales along the ordering (non-increasing)."""
        return self.lengths[self.perm]


@dataclass(frozen=True)
class SparsityPattern:
    """Lower-triangular index set over order positions, column compressed.

    Column j holds sorted order positions i >= j; the diagonal is always
    present. subcritical_rho flags patterns built with rho < 2, where the
    pruned construction's complexity analysis does not apply.
    """

    n: int
    colptr: np.ndarray
    rowidx: np.ndarray
    rho: float = np.nan
    subcritical_rho: bool = False

    @property
    def nnz(self) -> int:
        return int(self.rowidx.shape[0])

    def column(self, j: int) -> np.ndarray:
        return self.rowidx[self.colptr[j]:self.colptr[j + 1]]

    def pairs(self) -> set[tuple[int, int]]:
        """The pattern as a set of (row, col) order-position pairs."""
        cols = np.repeat(np.arange(self.n), np.diff(self.colptr))
        return set(zip(self.rowidx.tolist(), cols.tolist()))


def pattern_from_pairs(n: int, rows, cols, rho: float = np.nan,
                       subcritical: bool = False) -> SparsityPattern:
    """Build a deduplicated column-compressed pattern; diagonal is forced in."""
    rows = np.concatenate([np.asarray(rows, dtype=np.int64), np.arange(n)])
    cols = np.concatenate([np.asarray(cols, dtype=np.int64), np.arange(n)])
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    keys = np.unique(lo * np.int64(n) + hi)
    col = keys // n
    row = keys % n
    order = np.argsort(col, kind="stable")
    col = col[order]
    row = row[order]
    colptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(colptr, col + 1, 1)
    colptr = np.cumsum(colptr)
    return SparsityPattern(n, colptr, row, rho, subcritical)


@njit(cache=True)
def _dist(coords, a, b):
    s = 0.0
    for t in range(coords.shape[1]):
        diff = coords[a, t] - coords[b, t]
        s += diff * diff
    return np.sqrt(s)


@njit(cache=True)
def _heap_higher(key, a, b):
    # max-heap priority: larger key first, ties to the smaller original index
    if key[a] != key[b]:
        return key[a] > key[b]
    return a < b


@njit(cache=True)
def _heap_siftdown(heap, pos, key, slot, size):
    idx = heap[slot]
    while True:
        child = 2 * slot + 1
        if child >= size:
            break
        if child + 1 < size and _heap_higher(key, heap[child + 1], heap[child]):
            child += 1
        if _heap_higher(key, heap[child], idx):
            heap[slot] = heap[child]
            pos[heap[slot]] = slot
            slot = child
        else:
            break
    heap[slot] = idx
    pos[idx] = slot


@njit(cache=True)
def _heap_pop(heap, pos, key, size):
    top = heap[0]
    pos[top] = -1
    size -= 1
    if size > 0:
        heap[0] = heap[size]
        pos[heap[0]] = 0
        _heap_siftdown(heap, pos, key, 0, size)
    return top, size


@njit(cache=True)
def _maximin_core(coords, l0, rho):
    """Heap-based maximin ordering plus children lists.

    Returns (perm, lengths, child_ptr, child_idx) where child_idx holds,
    for each original index i, all j with dist(i, j) <= rho * l[i]
    (everything, for the first index), in the slice
    child_ptr[i]:child_ptr[i+1], sorted by distance to i.
    """
    n = coords.shape[0]
    key = l0.copy()
    heap = np.arange(n)
    pos = np.arange(n)
    size = n
    # heapify
    for slot in range(n // 2 - 1, -1, -1):
        _heap_siftdown(heap, pos, key, slot, size)

    perm = np.empty(n, dtype=np.int64)
    lengths = np.empty(n, dtype=np.float64)

    # children finalized at pop time, stored contiguously in pop order
    child_ptr = np.zeros(n + 1, dtype=np.int64)
    child_of = np.empty(n, dtype=np.int64)  # original index -> pop position
    cap = 4 * n
    child_idx = np.empty(cap, dtype=np.int64)
    child_dst = np.empty(cap, dtype=np.float64)
    ntot = 0

    # parents as a global linked list
    pcap = 4 * n
    par_node = np.empty(pcap, dtype=np.int64)
    par_next = np.empty(pcap, dtype=np.int64)
    par_head = np.full(n, -1, dtype=np.int64)
    pcnt = 0

    # first index
    first, size = _heap_pop(heap, pos, key, size)
    perm[0] = first
    lengths[first] = key[first]
    child_of[first] = 0
    dists = np.empty(n, dtype=np.float64)
    for j in range(n):
        dists[j] = _dist(coords, first, j)
    order = np.argsort(dists, kind="mergesort")
    for t in range(n):
        j = order[t]
        child_idx[t] = j
        child_dst[t] = dists[j]
        par_node[pcnt] = first
        par_next[pcnt] = par_head[j]
        par_head[j] = pcnt
        pcnt += 1
        if pos[j] >= 0 and dists[j] < key[j]:
            key[j] = dists[j]
            _heap_siftdown(heap, pos, key, pos[j], size)
    ntot = n
    child_ptr[1] = ntot

    scratch_j = np.empty(n, dtype=np.int64)
    scratch_d = np.empty(n, dtype=np.float64)

    for step in range(1, n):
        i, size = _heap_pop(heap, pos, key, size)
        li = key[i]
        perm[step] = i
        lengths[i] = li
        child_of[i] = step

        # parent: closest j among those whose children cover B(i, rho*l[i]);
        # the first index always qualifies since its child list is complete
        best = -1
        best_d = np.inf
        node = par_head[i]
        while node >= 0:
            j = par_node[node]
            dij = _dist(coords, i, j)
            if j == first or dij + rho * li <= rho * lengths[j]:
                if dij < best_d or (dij == best_d and j < best):
                    best = j
                    best_d = dij
            node = par_next[node]
        k = best
        dik = best_d

        # scan children of k close enough to contain children of i;
        # the child list is sorted by distance to k, so stop early
        bound = dik + rho * li
        nchild = 0
        kpop = child_of[k]
        lo = child_ptr[kpop]
        hi = child_ptr[kpop + 1]
        for t in range(lo, hi):
            if child_dst[t] > bound:
                break
            j = child_idx[t]
            dij = _dist(coords, i, j)
            if pos[j] >= 0 and dij < key[j]:
                key[j] = dij
                _heap_siftdown(heap, pos, key, pos[j], size)
            if dij <= rho * li:
                scratch_j[nchild] = j
                scratch_d[nchild] = dij
                nchild += 1

        # grow buffers
        while ntot + nchild > cap:
            cap *= 2
            newi = np.empty(cap, dtype=np.int64)
            newd = np.empty(cap, dtype=np.float64)
            newi[:ntot] = child_idx[:ntot]
            newd[:ntot] = child_dst[:ntot]
            child_idx = newi
            child_dst = newd
        while pcnt + nchild > pcap:
            pcap *= 2
            newn = np.empty(pcap, dtype=np.int64)
            newx = np.empty(pcap, dtype=np.int64)
            newn[:pcnt] = par_node[:pcnt]
            newx[:pcnt] = par_next[:pcnt]
            par_node = newn
            par_next = newx

        sub = np.argsort(scratch_d[:nchild], kind="mergesort")
        for t in range(nchild):
            s = sub[t]
            j = scratch_j[s]
            child_idx[ntot + t] = j
            child_dst[ntot + t] = scratch_d[s]
            par_node[pcnt] = i
            par_next[pcnt] = par_head[j]
            par_head[j] = pcnt
            pcnt += 1
        ntot += nchild
        child_ptr[step + 1] = ntot

    return perm, lengths, child_ptr, child_idx[:ntot]


def maximin_fast(cloud: PointCloud, rho: float) -> tuple[MaximinOrdering, SparsityPattern]:
    """Maximin ordering and pattern S_rho at near-linear cost.

    The pattern contains exactly the lower-triangular (by order position)
    pairs with dist(x_i, x_j) <= rho * max(l[i], l[j]); the first column is
    dense when the boundary is empty (l of the first point is +inf).
    """
    if not np.isfinite(rho) or rho <= 0:
        raise ValueError("rho must be finite and positive")
    n = cloud.n
    l0 = boundary_distances(cloud)
    perm, lengths, child_ptr, child_idx = _maximin_core(cloud.coords, l0, float(rho))
    ordering = MaximinOrdering(perm, lengths)
    # children of i are all j with dist <= rho*l[i]; lower-triangularized by
    # rank this is exactly the max-rule pattern since l is non-increasing
    counts = np.diff(child_ptr)
    owner = np.repeat(perm, counts)
    rows = ordering.rank[child_idx]
    cols = ordering.rank[owner]
    # the first pivot's child list holds every index (needed for pruning);
    # keep only entries satisfying the max-rule predicate in the pattern
    l_first = lengths[perm[0]]
    if np.isfinite(l_first):
        first_slice = slice(child_ptr[0], child_ptr[1])
        keep_first = np.ones(rows.shape[0], dtype=bool)
        diff = cloud.coords[child_idx[first_slice]] - cloud.coords[perm[0]]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        keep_first[first_slice] = dist <= rho * l_first
        rows = rows[keep_first]
        cols = cols[keep_first]
    pattern = pattern_from_pairs(n, rows, cols, rho=rho, subcritical=rho < 2.0)
    return ordering, pattern


def maximin_naive(cloud: PointCloud, rho: float,
                  cap: int = NAIVE_CAP) -> tuple[MaximinOrdering, SparsityPattern]:
    """Quadratic reference: direct greedy scan and exhaustive pair enumeration."""
    n = cloud.n
    if n > cap:
        raise ValueError(f"naive oracle capped at N={cap}")
    if not np.isfinite(rho) or rho <= 0:
        raise ValueError("rho must be finite and positive")
    coords = cloud.coords
    # all pairwise distances, accumulated coordinate-by-coordinate so the
    # float operations match the fast path exactly
    sq = np.zeros((n, n))
    for t in range(cloud.dim):
        diff = coords[:, t][:, None] - coords[:, t][None, :]
        sq += diff * diff
    dmat = np.sqrt(sq)

    mind = boundary_distances(cloud)
    perm = np.empty(n, dtype=np.int64)
    lengths = np.empty(n, dtype=np.float64)
    chosen = np.zeros(n, dtype=bool)
    for step in range(n):
        masked = np.where(chosen, -np.inf, mind)
        i = int(np.argmax(masked))  # argmax takes the smallest index on ties
        perm[step] = i
        lengths[i] = mind[i]
        chosen[i] = True
        mind = np.minimum(mind, dmat[i])
    ordering = MaximinOrdering(perm, lengths)

    with np.errstate(invalid="ignore"):
        lmax = np.maximum(lengths[:, None], lengths[None, :])
        admitted = dmat <= rho * lmax
    ii, jj = np.nonzero(admitted)
    keep = ii < jj
    rows_r = ordering.rank[ii[keep]]
    cols_r = ordering.rank[jj[keep]]
    pattern = pattern_from_pairs(n, rows_r, cols_r, rho=rho, subcritical=rho < 2.0)
    return ordering, pattern


def min_rule_pattern(ordering: MaximinOrdering, cloud: PointCloud,
                     rho: float) -> SparsityPattern:
    """Pattern with dist <= rho * min(l[i], l[j]), lower-triangular in the
    *reversed* ordering (used to factorize precision matrices)."""
    if cloud.n != ordering.n:
        raise ValueError("ordering and cloud sizes differ")
    n = cloud.n
    if rho == 0:
        diag = np.arange(n, dtype=np.int64)
        return pattern_from_pairs(n, diag, diag, rho=rho, subcritical=True)
    coords = cloud.coords
    lengths = ordering.lengths
    rows_all = []
    cols_all = []
    # min(l[i], l[j]) is l of the point later in the maximin ordering, so
    # enumerate, for each point, earlier points within rho * (own length)
    rev_pos = n - 1 - ordering.rank
    for i in range(n):
        r = rho * lengths[i]
        if not np.isfinite(r):
            near = np.arange(n)
        else:
            diff = coords - coords[i]
            near = np.nonzero(np.einsum("ij,ij->i", diff, diff) <= r * r)[0]
        earlier = near[ordering.rank[near] < ordering.rank[i]]
        if earlier.size:
            # i is later in maximin order, hence earlier in the reversal:
            # column = reversed position of i, rows = reversed positions of j
            rows_all.append(rev_pos[earlier])
            cols_all.append(np.full(earlier.size, rev_pos[i], dtype=np.int64))
    if rows_all:
        rows = np.concatenate(rows_all)
        cols = np.concatenate(cols_all)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
    return pattern_from_pairs(n, rows, cols, rho=rho, subcritical=rho < 2.0)


def build_levels(ordering: MaximinOrdering, h: float) -> np.ndarray:
    """Scale levels 1..q per index: level k collects h^k <= l/l_ref < h^(k-1).

    l_ref is the first length scale when finite, otherwise the second, with
    the first index forced into level 1. Levels weakly increase along the
    ordering because l is non-increasing.
    """
    if not (0.0 < h < 1.0):
        raise ValueError("h must lie in (0, 1)")
    n = ordering.n
    if n == 0:
        raise ValueError("empty ordering")
    lo = ordering.ordered_lengths()
    levels_ord = np.ones(n, dtype=np.int64)
    if n > 1:
        l_ref = lo[0] if np.isfinite(lo[0]) else lo[1]
        ratio = lo / l_ref
        lmin = ratio[np.isfinite(ratio)].min()
        q = 1
        while h ** q > lmin and q < 64 * n:
            q += 1
        powers = h ** np.arange(q + 1)  # powers[k] = h^k, descending
        for k in range(1, q + 1):
            levels_ord[np.isfinite(ratio) & (ratio < powers[k - 1])] = k + 0
        # predicate h^k <= ratio < h^(k-1): a point sitting exactly on h^(k-1)
        # belongs to level k-1, which the strict < above already ensures
        levels_ord[~np.isfinite(ratio)] = 1
    levels = np.empty(n, dtype=np.int64)
    levels[ordering.perm] = levels_ord
    return levels

"""Acceptance suite: one criterion per test, one PASS/FAIL line per criterion.

Run with ``python3 -m pytest tests/test_acceptance.py -s`` to see the lines
as they complete (the full suite takes several minutes). Every numeric
threshold here is frozen; do not loosen one to make a test pass.
"""

import itertools
import time

import numpy as np
from scipy.spatial.distance import cdist

from kernelchol.geometry import (BoundaryPolicy, PointCloud,
                                 gen_deformed_manifold, gen_uniform)
from kernelchol.ichol import (dense_cholesky, factor_kernel, factor_precision,
                              ichol0)
from kernelchol.kernels import KernelSpec, assemble, dense_kernel_matrix
from kernelchol.linalg import (FactorOperator, pca_residual_norm, pcg_solve)
from kernelchol.metrics import sampled_frobenius_error
from kernelchol.ordering import (maximin_fast, maximin_naive,
                                 pattern_from_pairs)
from kernelchol.supernodal import build_supernodal


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line, flush=True)
    assert ok, line


def test_criterion_01_ordering_oracle_equivalence():
    # fast ordering/pattern must match the quadratic reference exactly
    combos = list(itertools.product((100, 500, 2000), (1, 2, 3),
                                    (False, True), (1.5, 3.0)))[:20]
    worst = 0.0
    for seed, (n, d, box, rho) in enumerate(combos):
        boundary = BoundaryPolicy.unit_box() if box else BoundaryPolicy.none()
        cloud = gen_uniform(n, d, seed=seed, boundary=boundary)
        of, pf = maximin_fast(cloud, rho)
        on, pn = maximin_naive(cloud, rho)
        assert np.array_equal(of.perm, on.perm)
        assert np.array_equal(pf.colptr, pn.colptr)
        assert np.array_equal(pf.rowidx, pn.rowidx)
        finite = np.isfinite(on.lengths)
        rel = np.abs(of.lengths[finite] - on.lengths[finite])
        rel /= np.abs(on.lengths[finite])
        worst = max(worst, float(rel.max()) if rel.size else 0.0)
        assert np.array_equal(np.isfinite(of.lengths), finite)
    _report(1, "ordering oracle equivalence", worst <= 1e-12,
            f"20 clouds exact; worst length rel err {worst:.2e}")


def test_criterion_02_full_pattern_equivalence():
    # with the complete lower triangle no update is skipped, so the
    # incomplete factorization must reproduce the dense factor
    n = 200
    cloud = gen_uniform(n, 2, seed=1, boundary=BoundaryPolicy.unit_box())
    ordering, _ = maximin_fast(cloud, 2.0)
    rows, cols = np.tril_indices(n)
    full = pattern_from_pairs(n, rows, cols)
    worst = 0.0
    for spec in (KernelSpec.matern(1.0, 0.2), KernelSpec.cauchy(0.2, 1.0, 0.5)):
        matrix = assemble(cloud, spec, full, ordering.perm)
        l = ichol0(matrix).dense()
        ref = dense_cholesky(dense_kernel_matrix(cloud, spec, ordering.perm))
        # relative to entry size with a unit floor (the matrices have unit
        # diagonal, so this is relative to the matrix scale); entries that
        # are pure cancellation noise cannot carry a bare relative bound
        worst = max(worst, float(np.max(np.abs(l - ref) / (1.0 + np.abs(ref)))))
    _report(2, "full-pattern equivalence", worst <= 1e-12,
            f"max entrywise err (rel to 1+|entry|) vs dense factor {worst:.2e}")


def test_criterion_03_pattern_exactness():
    # on stored positions the factorization residual is exactly zero up to
    # round-off: the update rule matches the dense recurrence there
    cloud = gen_uniform(2000, 2, seed=2, boundary=BoundaryPolicy.none())
    spec = KernelSpec.matern(0.5, 0.2)
    factor, ordering, _ = factor_kernel(cloud, spec, 3.0)
    assert factor.rank == cloud.n, "pivot failure invalidates this criterion"
    theta = dense_kernel_matrix(cloud, spec, ordering.perm)
    prod = (factor.to_csc() @ factor.to_csc().T).toarray()
    pat = factor.pattern
    worst = 0.0
    for j in range(pat.n):
        rows = pat.column(j)
        err = np.abs(prod[rows, j] - theta[rows, j]) / np.abs(theta[rows, j])
        worst = max(worst, float(err.max()))
    _report(3, "pattern exactness", worst <= 1e-10,
            f"max rel residual on stored pairs {worst:.2e}")


def test_criterion_04_error_decay_in_rho():
    cloud = gen_uniform(10_000, 2, seed=0, boundary=BoundaryPolicy.none())
    spec = KernelSpec.matern(1.0, 0.2)
    rhos = np.array([2.0, 3.0, 4.0, 5.0])
    errs = []
    for rho in rhos:
        factor, _, _ = factor_kernel(cloud, spec, rho)
        errs.append(sampled_frobenius_error(factor, cloud, spec).mean_E)
    errs = np.array(errs)
    decreasing = bool(np.all(np.diff(errs) < 0))
    corr = float(np.corrcoef(rhos, np.log(errs))[0, 1])
    # frozen regression baseline: first measured E(rho=5) was 7.6e-5;
    # the bound below allows ~2x drift before failing
    frozen_bound = 1.6e-4
    ok = decreasing and corr <= -0.97 and errs[-1] <= min(1e-2, frozen_bound)
    _report(4, "exponential error decay in rho", ok,
            f"E={np.array2string(errs, precision=2)} corr={corr:.4f} "
            f"E(5)={errs[-1]:.2e} (bound {frozen_bound:.1e})")


def test_criterion_05_near_linear_scaling():
    spec = KernelSpec.matern(1.0, 0.2)
    stats = {}
    for n in (100_000, 200_000):
        cloud = gen_uniform(n, 2, seed=3, boundary=BoundaryPolicy.none())
        t0 = time.perf_counter()
        factor, _, _ = factor_kernel(cloud, spec, 3.0)
        stats[n] = (time.perf_counter() - t0, factor.pattern.nnz / n)
    tratio = stats[200_000][0] / stats[100_000][0]
    nnzratio = stats[200_000][1] / stats[100_000][1]
    ok = tratio <= 3.0 and nnzratio <= 1.3
    _report(5, "near-linear scaling", ok,
            f"time x{tratio:.2f} (<=3.0), nnz/N x{nnzratio:.3f} (<=1.3)")


def test_criterion_06_pca_decay():
    cloud = gen_uniform(4000, 2, seed=4, boundary=BoundaryPolicy.none())
    spec = KernelSpec.matern(1.0, 0.2)
    factor, ordering, _ = factor_kernel(cloud, spec, 8.0)
    theta = dense_kernel_matrix(cloud, spec, factor.perm)
    ks = np.array([50, 100, 200, 400, 800])
    norms = np.array([pca_residual_norm(factor, int(k), lambda v: theta @ v)
                      for k in ks])
    slope = float(np.polyfit(np.log(ks), np.log(norms), 1)[0])
    ok = -2.6 <= slope <= -1.4
    _report(6, "low-rank residual decay", ok,
            f"log-log slope {slope:.3f} in [-2.6, -1.4]")


def test_criterion_07_nugget_pcg():
    cloud = gen_uniform(2000, 2, seed=5, boundary=BoundaryPolicy.none())
    spec = KernelSpec.matern(1.0, 0.2, nugget=1.0)
    factor, _, _ = factor_kernel(cloud, spec, 3.0)
    # original index order throughout: solve() permutes internally
    theta = dense_kernel_matrix(cloud, spec)
    rng = np.random.Generator(np.random.PCG64(0))
    b = rng.standard_normal(cloud.n)
    plain = pcg_solve(lambda v: theta @ v, b)
    prec = pcg_solve(lambda v: theta @ v, b, precond=FactorOperator(factor))
    ok = (prec.converged and plain.converged
          and prec.iterations < plain.iterations and prec.iterations <= 50)
    _report(7, "factor-preconditioned CG", ok,
            f"{prec.iterations} preconditioned vs {plain.iterations} plain "
            f"iterations to 1e-8")


def test_criterion_08_precision_factorization():
    n = 500
    cloud = PointCloud(np.linspace(0.0, 1.0, n).reshape(-1, 1),
                       BoundaryPolicy.none())
    a = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1) + np.eye(n)
    errs = []
    for rho in (3.0, 1.5, 1.0):
        factor, ordering = factor_precision(a, cloud, rho)
        perm_rev = ordering.perm[::-1]
        ap = a[np.ix_(perm_rev, perm_rev)]
        l = factor.dense()
        errs.append(float(np.linalg.norm(l @ l.T - ap) / np.linalg.norm(a)))
    ok = errs[0] <= 1e-8 and errs[0] < errs[1] < errs[2]
    _report(8, "reverse-ordering precision factorization", ok,
            f"errors {errs[0]:.2e} < {errs[1]:.2e} < {errs[2]:.2e} "
            f"as rho shrinks 3.0 -> 1.0")


def _check_plan_invariants(cloud, plan):
    # pseudodistance between original indices i, j
    d = cdist(cloud.coords, cloud.coords)
    pd = d * plan.h ** -np.minimum.outer(plan.levels, plan.levels).astype(float)
    by_level = plan.supernodes_by_level()
    for level, sids in by_level.items():
        centers = np.array([plan.node_center[s] for s in sids])
        # centers are pairwise farther than rho apart (disjoint rho/2 balls)
        if centers.size > 1:
            block = pd[np.ix_(centers, centers)]
            np.fill_diagonal(block, np.inf)
            assert block.min() > plan.rho
        # every member lies within rho of its own center and no other
        # same-level center is strictly closer
        for s in sids:
            mem = plan.members[s]
            assert np.all(pd[plan.node_center[s], mem] <= plan.rho)
            if centers.size > 1:
                own = pd[plan.node_center[s], mem]
                best = pd[np.ix_(centers, mem)].min(axis=0)
                assert np.all(own <= best + 1e-12)
    # coloring: same-level supernodes joined in the auxiliary graph must
    # receive different colors
    aux = set(zip(plan.aux_rows.tolist(), plan.aux_cols.tolist()))
    for sa, sb in aux:
        if sa != sb and plan.node_level[sa] == plan.node_level[sb]:
            assert plan.colors[sa] != plan.colors[sb]
    # the permutation lists each supernode contiguously, with levels
    # non-decreasing and colors in non-decreasing blocks within a level
    pos = np.empty(cloud.n, dtype=np.int64)
    pos[plan.perm] = np.arange(cloud.n)
    starts = []
    for s in range(plan.n_supernodes):
        mem_pos = np.sort(pos[plan.members[s]])
        assert np.array_equal(mem_pos, np.arange(mem_pos[0],
                                                 mem_pos[0] + mem_pos.size))
        starts.append((int(mem_pos[0]), s))
    seq = np.array([s for _, s in sorted(starts)])
    lv = plan.node_level[seq]
    co = plan.colors[seq]
    assert np.all(np.diff(lv) >= 0)
    for level in np.unique(lv):
        assert np.all(np.diff(co[lv == level]) >= 0)


def test_criterion_09_supernodal_parity():
    cloud = gen_uniform(10_000, 2, seed=0, boundary=BoundaryPolicy.none())
    spec = KernelSpec.matern(1.0, 0.2)
    f_max, _, _ = factor_kernel(cloud, spec, 3.0, mode="maximin")
    f_sup, _, _ = factor_kernel(cloud, spec, 3.0, mode="supernodal")
    e_max = sampled_frobenius_error(f_max, cloud, spec).mean_E
    e_sup = sampled_frobenius_error(f_sup, cloud, spec).mean_E
    small = gen_uniform(2000, 2, seed=6, boundary=BoundaryPolicy.unit_box())
    ordering, _ = maximin_fast(small, 3.0)
    plan = build_supernodal(ordering, small, 3.0)
    _check_plan_invariants(small, plan)
    ok = e_sup <= 2.0 * e_max
    _report(9, "supernodal parity", ok,
            f"E_super={e_sup:.2e} vs E_maximin={e_max:.2e} "
            f"(ratio {e_sup / e_max:.2f} <= 2.0); plan invariants hold")


def test_criterion_10_intrinsic_dimension():
    n, rho = 10_000, 3.0
    flat = gen_uniform(n, 2, seed=7, boundary=BoundaryPolicy.none())
    bent = gen_deformed_manifold(n, 0.3, seed=7)
    _, p_flat = maximin_fast(flat, rho)
    _, p_bent = maximin_fast(bent, rho)
    ratio = (p_bent.nnz / n) / (p_flat.nnz / n)
    _report(10, "intrinsic-dimension sparsity", ratio <= 1.5,
            f"manifold nnz/N is x{ratio:.3f} the flat value (<=1.5)")

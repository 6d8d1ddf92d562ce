"""Command-line frontend: dataset generation, factorization, downstream
linear-algebra tasks, error measurement, and benchmark sweeps.

Exit codes: 0 success (rank-deficient factors are reported data, not
failure), 2 usage error, 3 I/O error, 4 numerical/structural failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as kio
from .geometry import BoundaryPolicy, gen_deformed_manifold, gen_uniform
from .ichol import factor_kernel
from .kernels import parse_kernel_spec
from .linalg import (FactorOperator, logdet, matvec, pca_approx,
                     pcg_solve, sample, solve)
from .metrics import CSV_HEADER, csv_row, sampled_frobenius_error

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _boundary(args) -> BoundaryPolicy:
    return BoundaryPolicy.unit_box() if getattr(args, "unit_box", False) \
        else BoundaryPolicy.none()


def _load_cloud(args):
    path = args.points
    if path.endswith(".csv"):
        return kio.read_points_csv(path, _boundary(args))
    return kio.read_points(path, _boundary(args))


def _kernel(args):
    try:
        return parse_kernel_spec(args.kernel, nugget=args.nugget)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_gen(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.manifold:
        cloud = gen_deformed_manifold(args.n, args.dz, args.seed)
    else:
        cloud = gen_uniform(args.n, args.d, args.seed, _boundary(args))
    if args.out.endswith(".csv"):
        kio.write_points_csv(args.out, cloud)
    else:
        kio.write_points(args.out, cloud)
    print(f"wrote {cloud.n} points (d={cloud.dim}) to {args.out}")
    return EXIT_OK


def cmd_factor(args) -> int:
    cloud = _load_cloud(args)
    spec = _kernel(args)
    factor, ordering, t = factor_kernel(cloud, spec, args.rho, mode=args.mode)
    kio.write_factor(args.out, factor)
    rep = sampled_frobenius_error(factor, cloud, spec, reps=args.reps,
                                  seed=args.seed)
    print(CSV_HEADER)
    print(csv_row(cloud.n, cloud.dim, args.kernel, args.rho,
                  factor.pattern.nnz, factor.rank,
                  t.t_order, t.t_entries, t.t_ichol, rep, None))
    return EXIT_OK


def _vector_io(path, n=None):
    v = kio.read_vector_text(path) if path.endswith(".txt") else kio.read_vector(path)
    if n is not None and v.shape[0] != n:
        raise UsageError(f"vector length {v.shape[0]} does not match N={n}")
    return v


def _write_vec(path, v):
    if path.endswith(".txt"):
        kio.write_vector_text(path, v)
    else:
        kio.write_vector(path, v)


def cmd_matvec(args) -> int:
    factor = kio.read_factor(args.factor)
    v = _vector_io(args.vec, factor.n)
    _write_vec(args.out, matvec(FactorOperator(factor), v))
    return EXIT_OK


def cmd_solve(args) -> int:
    factor = kio.read_factor(args.factor)
    b = _vector_io(args.vec, factor.n)
    op = FactorOperator(factor)
    if args.pcg:
        res = pcg_solve(lambda v: matvec(op, v), b, tol=args.tol,
                        maxit=args.maxit, precond=op)
        _write_vec(args.out, res.x)
        print(f"pcg iterations={res.iterations} converged={res.converged}")
        return EXIT_OK if res.converged else EXIT_NUMERIC
    _write_vec(args.out, solve(op, b))
    return EXIT_OK


def cmd_logdet(args) -> int:
    factor = kio.read_factor(args.factor)
    print(f"{logdet(FactorOperator(factor)):.12e}")
    return EXIT_OK


def cmd_sample(args) -> int:
    factor = kio.read_factor(args.factor)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    z = rng.standard_normal(factor.n)
    _write_vec(args.out, sample(FactorOperator(factor), z))
    return EXIT_OK


def cmd_pca(args) -> int:
    factor = kio.read_factor(args.factor)
    if not 1 <= args.k <= factor.n:
        raise UsageError(f"--k must lie in [1, {factor.n}]")
    lk, perm = pca_approx(factor, args.k)
    dense = np.zeros((factor.n, args.k))
    lk_coo = lk.tocoo()
    dense[lk_coo.row, lk_coo.col] = lk_coo.data
    out = np.empty_like(dense)
    out[perm] = dense
    np.savetxt(args.out, out, delimiter=",", fmt="%.17g")
    print(f"wrote {args.k} factor columns to {args.out}")
    return EXIT_OK


def cmd_error(args) -> int:
    factor = kio.read_factor(args.factor)
    cloud = _load_cloud(args)
    spec = _kernel(args)
    rep = sampled_frobenius_error(factor, cloud, spec, m=args.m,
                                  reps=args.reps, seed=args.seed,
                                  interior=args.interior)
    print(f"E_mean={rep.mean_E:.6e} E_std={rep.std_E:.6e} "
          f"m={rep.m} interior={rep.interior}")
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    rhos = [float(r) for r in args.rhos.split(",")]
    kernels = args.kernels.split(";")
    if not sizes or not rhos or not kernels:
        raise UsageError("empty benchmark grid")
    print(CSV_HEADER)
    status = EXIT_OK
    for n in sizes:
        for ktext in kernels:
            for rho in rhos:
                try:
                    spec = parse_kernel_spec(ktext, nugget=args.nugget)
                    cloud = gen_uniform(n, args.d, args.seed, _boundary(args))
                    factor, _, t = factor_kernel(cloud, spec, rho,
                                                 mode=args.mode)
                    rep = sampled_frobenius_error(
                        factor, cloud, spec, reps=args.reps, seed=args.seed)
                    rep_int = sampled_frobenius_error(
                        factor, cloud, spec, reps=args.reps, seed=args.seed,
                        interior=True)
                    print(csv_row(n, args.d, ktext, rho, factor.pattern.nnz,
                                  factor.rank, t.t_order, t.t_entries,
                                  t.t_ichol, rep, rep_int))
                except Exception as exc:  # keep sweeping, mark the row
                    print(f'{n},{args.d},"{ktext}",{rho:g},failed: {exc}')
                    status = EXIT_NUMERIC
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kernelchol",
        description="Sparse Cholesky compression of kernel matrices")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_common_points(sp):
        sp.add_argument("--points", required=True, help="point file (.csv or binary)")
        sp.add_argument("--unit-box", action="store_true",
                        help="treat [0,1]^d box walls as boundary")

    def add_kernel(sp):
        sp.add_argument("--kernel", required=True,
                        help="e.g. matern:nu=1.0,l=0.2 | cauchy:l=0.4,alpha=0.5,beta=0.025 | exp:l=0.2")
        sp.add_argument("--nugget", type=float, default=0.0)

    sp = sub.add_parser("gen", help="generate a point cloud")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--manifold", action="store_true")
    sp.add_argument("--dz", type=float, default=0.3)
    sp.add_argument("--unit-box", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("factor", help="order, assemble, and factor")
    add_common_points(sp)
    add_kernel(sp)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--mode", choices=("maximin", "supernodal"),
                    default="maximin")
    sp.add_argument("--reps", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_factor)

    sp = sub.add_parser("matvec", help="apply L L^T to a vector")
    sp.add_argument("--factor", required=True)
    sp.add_argument("--vec", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_matvec)

    sp = sub.add_parser("solve", help="solve (L L^T) x = b")
    sp.add_argument("--factor", required=True)
    sp.add_argument("--vec", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--pcg", action="store_true",
                    help="use the factor as a CG preconditioner")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--maxit", type=int, default=1000)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("logdet", help="log-determinant of L L^T")
    sp.add_argument("--factor", required=True)
    sp.set_defaults(func=cmd_logdet)

    sp = sub.add_parser("sample", help="draw a sample with covariance L L^T")
    sp.add_argument("--factor", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("pca", help="export the first k factor columns")
    sp.add_argument("--factor", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_pca)

    sp = sub.add_parser("error", help="sampled relative Frobenius error")
    sp.add_argument("--factor", required=True)
    add_common_points(sp)
    add_kernel(sp)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--reps", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--interior", action="store_true")
    sp.set_defaults(func=cmd_error)

    sp = sub.add_parser("bench", help="benchmark sweep producing CSV rows")
    sp.add_argument("--sizes", required=True, help="comma-separated N values")
    sp.add_argument("--rhos", required=True, help="comma-separated rho values")
    sp.add_argument("--kernels", required=True,
                    help="semicolon-separated kernel spec strings")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--nugget", type=float, default=0.0)
    sp.add_argument("--mode", choices=("maximin", "supernodal"),
                    default="maximin")
    sp.add_argument("--reps", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--unit-box", action="store_true")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Near-linear sparse Cholesky compression, inversion, sampling, and
low-rank approximation of dense kernel matrices via coarse-to-fine
(maximin) elimination orderings and length-scale sparsity patterns."""

from .geometry import (BoundaryKind, BoundaryPolicy, PointCloud,
                       gen_deformed_manifold, gen_uniform)
from .ichol import (FactorTimings, SparseLowerFactor, dense_cholesky,
                    factor_kernel, factor_precision, ichol0)
from .kernels import (KernelSpec, SparseSymmetric, assemble, besselk,
                      dense_kernel_matrix, kernel_eval, parse_kernel_spec)
from .linalg import (FactorOperator, OperatorMeaning, PCGResult, logdet,
                     matvec, pca_approx, pca_residual_norm, pcg_solve,
                     sample, solve)
from .metrics import (ErrorReport, exact_frobenius_error, homogeneity_delta,
                      sampled_frobenius_error)
from .ordering import (MaximinOrdering, SparsityPattern, build_levels,
                       maximin_fast, maximin_naive, min_rule_pattern)
from .supernodal import SupernodalPlan, build_supernodal, lift_pattern

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

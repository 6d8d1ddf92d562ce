"""Covariance functions and sparse assembly of kernel-matrix entries.

Matérn evaluation uses half-integer closed forms where available and a
self-contained modified-Bessel-K routine otherwise: a Temme-style power
series below x = 2 and a Steed continued fraction above, followed by
upward recurrence in the order. The switch point x = 2 is where both
expansions hold full accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, vectorize

from .geometry import PointCloud
from .ordering import MaximinOrdering, SparsityPattern

_EULER_GAMMA = 0.5772156649015329
# 1/Gamma(1+x) = 1 + c1 x + c2 x^2 + c3 x^3 + O(x^4)
_C1 = _EULER_GAMMA
_C2 = -0.6558780715202538
_C3 = -0.0420026350340952


@njit(cache=True)
def _gam_pair(mu):
    """G1 = (1/Gamma(1-mu) - 1/Gamma(1+mu))/(2 mu) and
    G2 = (1/Gamma(1-mu) + 1/Gamma(1+mu))/2 for |mu| <= 1/2."""
    if abs(mu) < 1e-3:
        # Taylor form avoids the 0/0 and the cancellation near mu = 0
        g1 = -(_C1 + _C3 * mu * mu)
        g2 = 1.0 + _C2 * mu * mu
    else:
        gp = 1.0 / math.gamma(1.0 + mu)
        gm = 1.0 / math.gamma(1.0 - mu)
        g1 = (gm - gp) / (2.0 * mu)
        g2 = (gm + gp) / 2.0
    return g1, g2


@njit(cache=True)
def _besselk_scalar(nu, x):
    """K_nu(x) for nu >= 0, x > 0."""
    eps = 1e-16
    maxit = 10000
    nl = int(nu + 0.5)
    mu = nu - nl  # |mu| <= 1/2
    mu2 = mu * mu
    if x < 2.0:
        # series around x = 0 (Temme)
        x2 = 0.5 * x
        pimu = math.pi * mu
        if abs(pimu) < eps:
            fact = 1.0
        else:
            fact = pimu / math.sin(pimu)
        dd = -math.log(x2)
        e = mu * dd
        if abs(e) < eps:
            fact2 = 1.0
        else:
            fact2 = math.sinh(e) / e
        gam1, gam2 = _gam_pair(mu)
        gampl = gam2 - mu * gam1  # 1/Gamma(1+mu)
        gammi = gam2 + mu * gam1  # 1/Gamma(1-mu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * dd)
        ssum = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        sum1 = p
        for i in range(1, maxit + 1):
            ff = (i * ff + p + q) / (i * i - mu2)
            c *= d / i
            p /= i - mu
            q /= i + mu
            dl = c * ff
            ssum += dl
            sum1 += c * (p - i * ff)
            if abs(dl) < abs(ssum) * eps:
                break
        rkmu = ssum
        rk1 = sum1 * 2.0 / x
    else:
        # Steed's continued fraction CF2
        b = 2.0 * (1.0 + x)
        d = 1.0 / b
        h = d
        delh = d
        q1 = 0.0
        q2 = 1.0
        a1 = 0.25 - mu2
        q = a1
        c = a1
        a = -a1
        s = 1.0 + q * delh
        for i in range(2, maxit + 1):
            a -= 2.0 * (i - 1)
            c = -a * c / i
            qnew = (q1 - b * q2) / a
            q1 = q2
            q2 = qnew
            q += c * qnew
            b += 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h += delh
            dels = q * delh
            s += dels
            if abs(dels / s) < eps:
                break
        h = a1 * h
        rkmu = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
        rk1 = rkmu * (mu + x + 0.5 - h) / x
    # upward recurrence K_{mu+i+1} = 2(mu+i)/x K_{mu+i} + K_{mu+i-1}
    for i in range(1, nl + 1):
        rktemp = (mu + i) * (2.0 / x) * rk1 + rkmu
        rkmu = rk1
        rk1 = rktemp
    return rkmu


@vectorize(["float64(float64, float64)"], cache=True)
def besselk(nu, x):
    """Modified Bessel function of the second kind, K_nu(x), nu >= 0, x > 0."""
    return _besselk_scalar(nu, x)


_HALF_INTEGER_NU = (0.5, 1.5, 2.5)


@dataclass(frozen=True)
class KernelSpec:
    """Parametric covariance function plus nugget variance.

    family is one of "matern", "cauchy", "exp"; the nugget is a diagonal
    perturbation applied at assembly time, never inside kernel_eval.
    """

    family: str
    params: dict
    nugget: float = 0.0

    def __post_init__(self):
        fam = self.family
        p = self.params
        if self.nugget < 0:
            raise ValueError("nugget must be >= 0")
        if fam == "matern":
            if p.get("nu", 0) <= 0 or p.get("l", 0) <= 0:
                raise ValueError("matern requires nu > 0 and l > 0")
        elif fam == "cauchy":
            if p.get("l", 0) <= 0 or p.get("beta", 0) <= 0:
                raise ValueError("cauchy requires l > 0 and beta > 0")
            if not (0 < p.get("alpha", 0) <= 2):
                raise ValueError("cauchy requires alpha in (0, 2]")
        elif fam == "exp":
            if p.get("l", 0) <= 0:
                raise ValueError("exp requires l > 0")
        else:
            raise ValueError(f"unknown kernel family: {fam!r}")

    @staticmethod
    def matern(nu: float, l: float, nugget: float = 0.0) -> "KernelSpec":
        return KernelSpec("matern", {"nu": float(nu), "l": float(l)}, nugget)

    @staticmethod
    def cauchy(l: float, alpha: float, beta: float, nugget: float = 0.0) -> "KernelSpec":
        return KernelSpec("cauchy", {"l": float(l), "alpha": float(alpha),
                                     "beta": float(beta)}, nugget)

    @staticmethod
    def exponential(l: float, nugget: float = 0.0) -> "KernelSpec":
        return KernelSpec("exp", {"l": float(l)}, nugget)


def parse_kernel_spec(text: str, nugget: float = 0.0) -> KernelSpec:
    """Parse CLI strings like ``matern:nu=1.0,l=0.2`` or ``exp:l=0.2``."""
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise ValueError(f"malformed kernel parameter {item!r}")
            params[key.strip()] = float(val)
    required = {"matern": ("nu", "l"), "cauchy": ("l", "alpha", "beta"),
                "exp": ("l",)}
    if family not in required:
        raise ValueError(f"unknown kernel family: {family!r}")
    for key in required[family]:
        if key not in params:
            raise ValueError(f"kernel {family!r} is missing parameter {key!r}")
    return KernelSpec(family, params, nugget)


def kernel_eval(spec: KernelSpec, r):
    """Covariance at lag distance r >= 0 (scalar or array); no nugget."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("r must be finite and >= 0")
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    if spec.family == "cauchy":
        l, alpha, beta = (spec.params[k] for k in ("l", "alpha", "beta"))
        out = (1.0 + (r / l) ** alpha) ** (-beta / alpha)
    else:
        if spec.family == "exp":
            nu, l = 0.5, spec.params["l"]
        else:
            nu, l = spec.params["nu"], spec.params["l"]
        out = _matern(nu, l, r)
    return float(out[0]) if scalar else out


def _matern(nu: float, l: float, r: np.ndarray) -> np.ndarray:
    out = np.empty_like(r)
    tiny = r < 1e-12 * l  # continuous extension at zero lag
    out[tiny] = 1.0
    rr = r[~tiny]
    t = rr / l
    if nu == 0.5:
        vals = np.exp(-t)
    elif nu == 1.5:
        s3 = math.sqrt(3.0) * t
        vals = (1.0 + s3) * np.exp(-s3)
    elif nu == 2.5:
        s5 = math.sqrt(5.0) * t
        vals = (1.0 + s5 + s5 * s5 / 3.0) * np.exp(-s5)
    else:
        arg = math.sqrt(2.0 * nu) * t
        vals = (2.0 ** (1.0 - nu) / math.gamma(nu)) * arg ** nu * besselk(nu, arg)
    out[~tiny] = vals
    return out


@dataclass(frozen=True)
class SparseSymmetric:
    """Kernel matrix restricted to a lower-triangular pattern.

    values align with pattern storage (column-compressed); perm maps order
    positions to original point indices.
    """

    pattern: SparsityPattern
    values: np.ndarray
    perm: np.ndarray

    @property
    def n(self) -> int:
        return self.pattern.n


@njit(cache=True)
def _pattern_distances(coords, perm, colptr, rowidx):
    nnz = rowidx.shape[0]
    n = colptr.shape[0] - 1
    out = np.empty(nnz)
    for j in range(n):
        pj = perm[j]
        for t in range(colptr[j], colptr[j + 1]):
            pi = perm[rowidx[t]]
            s = 0.0
            for k in range(coords.shape[1]):
                diff = coords[pi, k] - coords[pj, k]
                s += diff * diff
            out[t] = np.sqrt(s)
    return out


def assemble(cloud: PointCloud, spec: KernelSpec, pattern: SparsityPattern,
             ordering: MaximinOrdering | np.ndarray) -> SparseSymmetric:
    """Evaluate the kernel on every stored pair; nugget goes on the diagonal."""
    perm = ordering.perm if isinstance(ordering, MaximinOrdering) else np.asarray(ordering)
    if perm.shape[0] != cloud.n or pattern.n != cloud.n:
        raise ValueError("pattern/ordering inconsistent with cloud")
    dists = _pattern_distances(cloud.coords, perm, pattern.colptr, pattern.rowidx)
    values = kernel_eval(spec, dists)
    if spec.nugget:
        diag = pattern.rowidx == np.repeat(np.arange(pattern.n),
                                           np.diff(pattern.colptr))
        values[diag] += spec.nugget
    return SparseSymmetric(pattern, values, perm)


def dense_kernel_matrix(cloud: PointCloud, spec: KernelSpec,
                        perm: np.ndarray | None = None) -> np.ndarray:
    """Dense kernel matrix oracle (optionally permuted); includes the nugget."""
    coords = cloud.coords if perm is None else cloud.coords[perm]
    diff = coords[:, None, :] - coords[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    theta = kernel_eval(spec, r.ravel()).reshape(r.shape)
    np.fill_diagonal(theta, 1.0 + spec.nugget)
    return theta

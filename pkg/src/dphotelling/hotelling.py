"""Two-sample mean-comparison statistics on raw or privatized summaries.

The quadratic-form statistic is always evaluated through an inverse
symmetric square root, t = factor * ||S^{-1/2} (mx - my)||^2, which makes
nonnegativity structural rather than a numerical accident.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numlin
from .mechanisms import PrivatizedSummary, laplace_mean_scale

CLASSICAL = "classical"
REWEIGHTED = "reweighted"
PRIVATE_CORRECTED = "private-corrected"

_KINDS = (CLASSICAL, REWEIGHTED, PRIVATE_CORRECTED)


@dataclass(frozen=True)
class PooledCovariance:
    matrix: np.ndarray
    kind: str
    n1: int
    n2: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown pooled kind {self.kind!r}")
        m = numlin.as_symmetric(self.matrix)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class NoiseCorrection:
    """Variance added to each diagonal entry by the two mean privatizations."""

    c1: float
    c2: float

    @property
    def total(self) -> float:
        return self.c1 + self.c2


def pooled_covariance(sx_cov, sy_cov, n1: int, n2: int,
                      kind: str = CLASSICAL) -> PooledCovariance:
    """Pool two sample covariances.

    classical:  ((n1-1) Sx + (n2-1) Sy) / (n1 + n2 - 2), requires n1+n2 >= 3
    reweighted: (n2 Sx + n1 Sy) / (n1 + n2)  (no equal-covariance assumption)
    """
    sx = numlin.as_symmetric(sx_cov)
    sy = numlin.as_symmetric(sy_cov)
    if sx.shape != sy.shape:
        raise ValueError(f"dimension mismatch: {sx.shape} vs {sy.shape}")
    if n1 < 1 or n2 < 1:
        raise ValueError("group sizes must be positive")
    if kind == CLASSICAL:
        if n1 + n2 < 3:
            raise ValueError("classical pooling needs n1 + n2 >= 3")
        mat = ((n1 - 1) * sx + (n2 - 1) * sy) / (n1 + n2 - 2)
    elif kind == REWEIGHTED:
        mat = (n2 * sx + n1 * sy) / (n1 + n2)
    else:
        raise ValueError(f"unknown pooled kind {kind!r}")
    return PooledCovariance(matrix=mat, kind=kind, n1=n1, n2=n2)


def noise_correction(m: float, d: int, n1: int, n2: int,
                     eps: float) -> NoiseCorrection:
    """Diagonal corrections c_i = 2 (2md / (n_i (eps/4)))^2.

    These are exactly the variances of the Laplace noise added to each mean
    coordinate when the total budget ``eps`` splits evenly four ways; they
    vanish under the privacy-off sentinel.
    """
    if not m > 0.0 or d < 1 or n1 < 1 or n2 < 1 or not eps > 0.0:
        raise ValueError("all noise-correction inputs must be positive")
    b1 = laplace_mean_scale(n1, m, d, eps / 4.0)
    b2 = laplace_mean_scale(n2, m, d, eps / 4.0)
    return NoiseCorrection(c1=2.0 * b1 * b1, c2=2.0 * b2 * b2)


def private_pooled_covariance(ps: PrivatizedSummary) -> PooledCovariance:
    """Classical pooling of the private covariances plus the diagonal correction.

    The correction c1 + c2 is computed from the mean budget parts actually
    spent, and is added exactly once; the result is positive definite
    whenever any noise was added.
    """
    base = pooled_covariance(ps.cov_x_dp, ps.cov_y_dp, ps.n1, ps.n2, CLASSICAL)
    d = ps.dim
    b1 = laplace_mean_scale(ps.n1, ps.bound_m, d, ps.budget.mean_x)
    b2 = laplace_mean_scale(ps.n2, ps.bound_m, d, ps.budget.mean_y)
    shift = 2.0 * b1 * b1 + 2.0 * b2 * b2
    mat = base.matrix + shift * np.eye(d)
    return PooledCovariance(matrix=mat, kind=PRIVATE_CORRECTED,
                            n1=ps.n1, n2=ps.n2)


def t2_statistic(mean_x, mean_y, pooled: PooledCovariance,
                 n1: int, n2: int) -> float:
    """Scaled Mahalanobis statistic (n1 n2 / (n1+n2)) ||S^{-1/2}(mx-my)||^2.

    Classical and reweighted pooled matrices must be invertible
    (SingularMatrixError otherwise); the private-corrected kind is positive
    definite by construction and only gets a round-off floor.
    """
    mx = np.asarray(mean_x, dtype=float).reshape(-1)
    my = np.asarray(mean_y, dtype=float).reshape(-1)
    d = pooled.matrix.shape[0]
    if mx.shape[0] != d or my.shape[0] != d:
        raise ValueError("mean vectors and pooled matrix disagree in dimension")
    if n1 < 1 or n2 < 1:
        raise ValueError("group sizes must be positive")
    floor = 1e-12 if pooled.kind == PRIVATE_CORRECTED else 0.0
    root = numlin.inverse_sqrt_psd(pooled.matrix, floor=floor)
    z = root @ (mx - my)
    return (n1 * n2 / (n1 + n2)) * float(z @ z)


def t_dp_statistic(ps: PrivatizedSummary) -> float:
    """Privatized statistic: t2 of the private means against the corrected pool."""
    pooled = private_pooled_covariance(ps)
    return t2_statistic(ps.mean_x_dp, ps.mean_y_dp, pooled, ps.n1, ps.n2)

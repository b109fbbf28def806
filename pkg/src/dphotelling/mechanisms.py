"""Privacy mechanisms: Laplace mean release and eigen-sampled covariance release.

The privacy budget for a two-sample release splits four ways (two means,
two covariances). Means get coordinate-wise Laplace noise scaled to the
cube bound; covariances go through an iterated eigenvalue/eigenvector
mechanism that always returns a symmetric PSD matrix. Privacy holds by
construction of the noise scales; the module audits budget sums but does
not re-derive sensitivity proofs.

``PRIVACY_OFF`` (infinity) is a testing-only sentinel: every mechanism
degenerates to the identity, so the pipeline can be checked against its
non-private counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numlin, randkit
from .errors import BoundViolationError

PRIVACY_OFF = math.inf

# Round-off slack when checking means against the declared cube bound.
_BOUND_SLACK = 1e-12


def _check_eps(eps: float, name: str = "epsilon") -> float:
    eps = float(eps)
    if not eps > 0.0 or math.isnan(eps):
        raise ValueError(f"{name} must be positive, got {eps}")
    return eps


@dataclass(frozen=True)
class PrivacyBudget:
    """Total privacy level and its four-way split.

    Parts must be positive and sum to ``epsilon_total`` (1e-12 tolerance on
    construction; releases re-audit with an exact compensated sum).
    """

    epsilon_total: float
    mean_x: float
    mean_y: float
    cov_x: float
    cov_y: float

    def __post_init__(self):
        _check_eps(self.epsilon_total, "epsilon_total")
        for name in ("mean_x", "mean_y", "cov_x", "cov_y"):
            _check_eps(getattr(self, name), name)
        total = math.fsum(self.parts)
        if not (total == self.epsilon_total
                or abs(total - self.epsilon_total)
                <= 1e-12 * max(1.0, abs(self.epsilon_total))):
            raise ValueError(
                f"budget parts sum to {total!r}, expected {self.epsilon_total!r}"
            )

    @property
    def parts(self) -> tuple:
        return (self.mean_x, self.mean_y, self.cov_x, self.cov_y)

    @classmethod
    def even_split(cls, epsilon: float) -> "PrivacyBudget":
        eps = _check_eps(epsilon)
        part = eps / 4.0
        return cls(eps, part, part, part, part)


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SampleSummary:
    """Per-group sufficient statistics: size, mean, covariance, cube bound."""

    n: int
    mean: np.ndarray
    cov: np.ndarray
    bound_m: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sample size must be positive")
        if not self.bound_m > 0.0:
            raise ValueError("bound_m must be positive")
        mean = _frozen(np.asarray(self.mean, dtype=float).reshape(-1))
        cov = _frozen(numlin.as_symmetric(self.cov))
        if cov.shape[0] != mean.shape[0]:
            raise ValueError("mean and covariance dimensions disagree")
        slack = _BOUND_SLACK * (1.0 + self.bound_m)
        if np.max(np.abs(mean)) > self.bound_m + slack:
            raise BoundViolationError(
                f"mean coordinate outside [-{self.bound_m}, {self.bound_m}]"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class PrivatizedSummary:
    """The four private releases plus the public metadata that scaled them."""

    mean_x_dp: np.ndarray
    mean_y_dp: np.ndarray
    cov_x_dp: np.ndarray
    cov_y_dp: np.ndarray
    budget: PrivacyBudget
    n1: int
    n2: int
    bound_m: float

    def __post_init__(self):
        object.__setattr__(self, "mean_x_dp", _frozen(np.asarray(self.mean_x_dp).reshape(-1)))
        object.__setattr__(self, "mean_y_dp", _frozen(np.asarray(self.mean_y_dp).reshape(-1)))
        object.__setattr__(self, "cov_x_dp", _frozen(numlin.as_symmetric(self.cov_x_dp)))
        object.__setattr__(self, "cov_y_dp", _frozen(numlin.as_symmetric(self.cov_y_dp)))

    @property
    def dim(self) -> int:
        return self.mean_x_dp.shape[0]


def laplace_mean_scale(n: int, m: float, d: int, eps_part: float) -> float:
    """Per-coordinate Laplace scale 2 m d / (n * eps_part) for a mean release.

    Returns 0.0 under the privacy-off sentinel.
    """
    scale = 2.0 * m * d / (n * eps_part)
    return 0.0 if not math.isfinite(eps_part) else scale


def compute_summary(data, m: float, clamp: bool = False) -> SampleSummary:
    """Sample mean and covariance (1/(n-1) normalization) of bounded rows.

    Every entry must lie in [-m, m]; with ``clamp=True`` entries are clipped
    into the cube *before* any statistic is formed, keeping the noise
    calibration valid.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"expected an n-by-d data matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise ValueError("need at least two observations")
    if not m > 0.0:
        raise ValueError("bound m must be positive")
    if clamp:
        x = np.clip(x, -m, m)
    elif np.max(np.abs(x)) > m:
        raise BoundViolationError(
            f"data entry outside [-{m}, {m}]; pass clamp=True to clip"
        )
    mean = x.mean(axis=0)
    centered = x - mean
    cov = (centered.T @ centered) / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return SampleSummary(n=n, mean=mean, cov=cov, bound_m=float(m))


def privatize_mean(rng: randkit.RngStream, mean, n: int, m: float,
                   eps_part: float) -> np.ndarray:
    """Laplace mechanism for a d-dimensional mean of n cube-bounded rows.

    Adds i.i.d. Laplace(0, 2md/(n * eps_part)) per coordinate. The
    privacy-off sentinel returns the mean unchanged.
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    _check_eps(eps_part, "eps_part")
    if n < 1:
        raise ValueError("n must be positive")
    if not m > 0.0:
        raise ValueError("bound m must be positive")
    d = mean.shape[0]
    if np.max(np.abs(mean)) > m + _BOUND_SLACK * (1.0 + m):
        raise BoundViolationError(
            f"mean coordinate outside [-{m}, {m}]: noise calibration invalid"
        )
    scale = laplace_mean_scale(n, m, d, eps_part)
    if scale == 0.0:
        return mean.copy()
    return mean + randkit.sample_laplace(rng, scale, size=d)


def ed_covariance(rng: randkit.RngStream, cov_hat, n: int, m: float,
                  eps_part: float) -> np.ndarray:
    """Private covariance release via noised eigenvalues and sampled eigenvectors.

    The input is rescaled to C = n cov_hat / (d m^2) so that it behaves like
    a Gram matrix of unit-bounded rows. Each eigenvalue receives Laplace
    noise of scale 2 / eps_step and is folded by absolute value; an
    orthonormal eigenbasis is rebuilt one direction at a time by sampling
    from the exponential-mechanism density exp((eps_step/4) u^T C u) on the
    sphere of the remaining subspace. Here eps_step = eps_part / (d + 1),
    except in one dimension where the whole budget goes to the single
    eigenvalue and no direction needs sampling. The reconstruction
    sum_i lam_i v_i v_i^T is unscaled by d m^2 / n, so the release estimates
    cov_hat itself.

    Always returns a symmetric PSD matrix. Under the privacy-off sentinel
    the exact eigenvalues and eigenvectors are kept, so the release equals
    cov_hat up to recomposition round-off.
    """
    _check_eps(eps_part, "eps_part")
    if n < 1:
        raise ValueError("n must be positive")
    if not m > 0.0:
        raise ValueError("bound m must be positive")
    cov_hat = numlin.as_symmetric(cov_hat)
    d = cov_hat.shape[0]
    scaled = (n / (d * m * m)) * cov_hat
    dec = numlin.jacobi_eigen(scaled)
    lam_hat = dec.eigenvalues
    psd_tol = 1e-10 * max(1.0, float(np.linalg.norm(scaled)))
    if lam_hat[-1] < -psd_tol:
        raise ValueError(
            f"covariance input is not PSD within round-off: "
            f"min eigenvalue {lam_hat[-1]:.3e}"
        )

    unscale = (d * m * m) / n

    if not math.isfinite(eps_part):
        lam_bar = np.abs(lam_hat)
        vecs = dec.eigenvectors
        out = (vecs * lam_bar) @ vecs.T
        return unscale * 0.5 * (out + out.T)

    eps_step = eps_part if d == 1 else eps_part / (d + 1)
    noise = randkit.sample_laplace(rng, 2.0 / eps_step, size=d)
    lam_bar = np.abs(lam_hat + noise)

    if d == 1:
        return np.array([[unscale * lam_bar[0]]])

    directions = np.empty((d, d))
    p_rows = np.eye(d)
    for i in range(d):
        ctil = p_rows @ scaled @ p_rows.T
        u = randkit.sample_bingham_vector(rng, ctil, eps_step)
        directions[:, i] = p_rows.T @ u
        if i < d - 1:
            p_rows = numlin.orthonormal_complement(directions[:, : i + 1].T)
    out = (directions * lam_bar) @ directions.T
    return unscale * 0.5 * (out + out.T)


def privatize_summaries(rng: randkit.RngStream, sx: SampleSummary,
                        sy: SampleSummary,
                        budget: PrivacyBudget) -> PrivatizedSummary:
    """Release both groups' means and covariances under one budget spend.

    Exactly four privatized quantities leave this boundary; no raw
    statistic is carried along. Each release consumes its own budget part
    and draws from its own substream.
    """
    if sx.dim != sy.dim:
        raise ValueError(f"dimension mismatch: {sx.dim} vs {sy.dim}")
    if sx.bound_m != sy.bound_m:
        raise ValueError("both groups must share the same cube bound m")
    total = math.fsum(budget.parts)
    if total != budget.epsilon_total:
        raise ValueError(
            f"budget audit failed: parts sum to {total!r}, "
            f"expected {budget.epsilon_total!r}"
        )
    m = sx.bound_m
    return PrivatizedSummary(
        mean_x_dp=privatize_mean(rng.substream(0), sx.mean, sx.n, m, budget.mean_x),
        mean_y_dp=privatize_mean(rng.substream(1), sy.mean, sy.n, m, budget.mean_y),
        cov_x_dp=ed_covariance(rng.substream(2), sx.cov, sx.n, m, budget.cov_x),
        cov_y_dp=ed_covariance(rng.substream(3), sy.cov, sy.n, m, budget.cov_y),
        budget=budget,
        n1=sx.n,
        n2=sy.n,
        bound_m=m,
    )

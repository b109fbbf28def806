"""Seedable randomness, elementary samplers, and chi-squared functions.

Streams are counter-based (Philox keyed through numpy's SeedSequence), so a
stream is fully determined by ``(seed, stream_id)`` plus an optional
substream path. That makes parallel Monte Carlo reproducible regardless of
scheduling: give every replication its own stream id or substream tag and
the draws never depend on execution order.

The generator is not cryptographically secure; for an actual privacy
deployment the Laplace and sphere samplers must be re-backed by a CSPRNG.
"""

from __future__ import annotations

import math

import numpy as np

from . import numlin
from .errors import SamplerStallError


class RngStream:
    """One independent random stream, identified by (seed, stream_id).

    Identical ``(seed, stream_id)`` and substream path reproduce an
    identical draw sequence; distinct ids or paths give statistically
    independent streams. A stream is owned by one logical task at a time.
    """

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple = ()):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(int(t) for t in _path)
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self._path)
        )
        self.generator = np.random.Generator(np.random.Philox(ss))

    def substream(self, *tags: int) -> "RngStream":
        """Derive an independent stream; deterministic in the tag path."""
        return RngStream(self.seed, self.stream_id, self._path + tags)

    def __repr__(self) -> str:
        return (
            f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"path={self._path})"
        )


def sample_laplace(rng: RngStream, scale: float, size=None):
    """Draw from the centered Laplace distribution with the given scale.

    Density (1/2b) exp(-|x|/b); variance 2 b^2. Returns a float when
    ``size`` is None, otherwise an array of that shape.
    """
    if not scale > 0.0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    if size is None:
        return float(rng.generator.laplace(0.0, scale))
    return rng.generator.laplace(0.0, scale, size=size)


def sample_std_normal(rng: RngStream, size=None):
    """Standard normal draw(s)."""
    if size is None:
        return float(rng.generator.standard_normal())
    return rng.generator.standard_normal(size)


def sample_mvn(rng: RngStream, cov, size=None):
    """Centered multivariate normal draw(s) with the given covariance.

    The factor is the symmetric PSD square root of ``cov`` (eigenvalues
    clamped at zero), so a PSD-within-round-off covariance is accepted.
    Returns shape (d,) for ``size=None``, else (size, d).
    """
    root = numlin.psd_sqrt(cov)
    d = root.shape[0]
    if size is None:
        return root @ rng.generator.standard_normal(d)
    z = rng.generator.standard_normal((int(size), d))
    return z @ root  # root is symmetric


# --- chi-squared distribution ------------------------------------------------

_GAMMA_EPS = 1e-14
_GAMMA_MAX_ITER = 500


def _reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x).

    Series expansion for x < a + 1, Lentz continued fraction otherwise
    (the classical pairing; see Numerical Recipes ch. 6).
    """
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 0.0
    lg = math.lgamma(a)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(_GAMMA_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _GAMMA_EPS:
                return total * math.exp(-x + a * math.log(x) - lg)
        raise ArithmeticError("incomplete gamma series did not converge")
    # Continued fraction for Q(a, x) = 1 - P(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            q = math.exp(-x + a * math.log(x) - lg) * h
            return 1.0 - q
    raise ArithmeticError("incomplete gamma continued fraction did not converge")


def _check_dof(dof: int) -> int:
    d = int(dof)
    if d < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {dof}")
    return d


def chi2_cdf(x: float, dof: int) -> float:
    """CDF of the chi-squared distribution with ``dof`` degrees of freedom."""
    d = _check_dof(dof)
    if x < 0.0:
        raise ValueError("chi-squared variate must be nonnegative")
    return min(1.0, max(0.0, _reg_lower_gamma(0.5 * d, 0.5 * x)))


def chi2_quantile(prob: float, dof: int) -> float:
    """Quantile of the chi-squared distribution, by bisection on the CDF.

    The bracket [0, d + 40 sqrt(d) + 40] covers prob up to 1 - 1e-12 for
    d <= 1000.
    """
    d = _check_dof(dof)
    if not 0.0 < prob < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {prob}")
    lo = 0.0
    hi = d + 40.0 * math.sqrt(d) + 40.0
    if chi2_cdf(hi, d) < prob:
        raise ArithmeticError(f"quantile bracket too small for prob={prob}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, d) < prob:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


# --- sphere sampler ----------------------------------------------------------


def solve_b(lambdas) -> float:
    """Solve sum_i 1/(b + 2 lambda_i) = 1 for b > 0 by bisection.

    The input must be nonnegative with min lambda = 0, which guarantees a
    unique root in (0, q + 2 max lambda].
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("lambdas must be a nonempty vector")
    q = lam.size
    lam_max = float(np.max(lam))
    lam_min = float(np.min(lam))
    if lam_min < -1e-10 * max(1.0, lam_max):
        raise ValueError("lambdas must be nonnegative")
    if lam_min > 1e-8 * max(1.0, lam_max):
        raise ValueError("smallest lambda must be zero")
    lam = np.maximum(lam, 0.0)
    if lam_max == 0.0:
        return float(q)  # equation reads q / b = 1

    if q <= 16:
        two_lam = [2.0 * float(v) for v in lam]

        def f(b: float) -> float:
            return sum(1.0 / (b + t) for t in two_lam) - 1.0
    else:
        two_lam_arr = 2.0 * lam

        def f(b: float) -> float:
            return float(np.sum(1.0 / (b + two_lam_arr))) - 1.0

    lo, hi = 1e-12, q + 2.0 * lam_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10:
            break
    b = 0.5 * (lo + hi)
    residual = abs(f(b))
    if residual > 1e-8:
        raise ArithmeticError(f"b-equation residual {residual:.3e} > 1e-8")
    return b


_MAX_PROPOSALS = 10**6


def sample_bingham_vector(rng: RngStream, c, eps_step: float) -> np.ndarray:
    """Draw a unit q-vector with density proportional to exp((eps_step/4) u^T C u).

    Rejection sampler with an angular-central-Gaussian envelope: with
    A = (eps_step/4)(lmax(C) I - C), proposals are z / ||z|| for
    z ~ N(0, Omega^{-1}), Omega = I + 2A/b, and are accepted with
    probability exp(-u^T A u) (u^T Omega u)^{q/2} / M where
    M = exp(-(q-b)/2) (q/b)^{q/2}. Writing s = u^T A u, the ratio is
    exp(-s)(1 + 2s/b)^{q/2} / M, and M is exactly the maximum of the
    numerator over s >= 0, so the ratio is a true probability; it equals 1
    identically when C is isotropic.
    """
    if not eps_step > 0.0:
        raise ValueError(f"eps_step must be positive, got {eps_step}")
    c = numlin.as_symmetric(c)
    q = c.shape[0]
    dec = numlin.jacobi_eigen(c)
    mu = dec.eigenvalues  # descending
    spread = float(mu[0] - mu[-1])
    # Eigenvalues of A in the eigenbasis of C; the largest mu gives 0.
    lam_a = 0.25 * eps_step * (mu[0] - mu)
    lam_a[0] = 0.0
    b = solve_b(lam_a)
    log_m = -(q - b) / 2.0 + (q / 2.0) * (math.log(q) - math.log(b))
    omega_diag = 1.0 + 2.0 * lam_a / b
    v = dec.eigenvectors
    # Proposal factor: Omega^{-1/2} = V diag(omega)^{-1/2} V^T.
    prop_root = (v / np.sqrt(omega_diag)) @ v.T

    gen = rng.generator
    batch = 32
    used = 0
    while used < _MAX_PROPOSALS:
        batch = min(batch, _MAX_PROPOSALS - used)
        z = gen.standard_normal((batch, q)) @ prop_root
        norms = np.linalg.norm(z, axis=1)
        norms[norms == 0.0] = 1.0
        u = z / norms[:, None]
        # u^T A u and u^T Omega u through the shared eigenbasis of C.
        y = u @ v
        uau = (y * y) @ lam_a
        uou = (y * y) @ omega_diag
        log_ratio = -uau + (q / 2.0) * np.log(uou) - log_m
        accept = np.log(gen.uniform(size=batch)) < log_ratio
        hits = np.nonzero(accept)[0]
        if hits.size:
            out = u[hits[0]].copy()
            return out / float(np.linalg.norm(out))
        used += batch
        batch = min(1024, batch * 2)
    raise SamplerStallError(q, eps_step, spread)

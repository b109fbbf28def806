"""Decision rules: chi-squared asymptotics and the parametric bootstrap.

Both rules reject on a strict inequality statistic > threshold. The
bootstrap threshold is pure post-processing of the privatized summaries:
it resamples means from the released covariances, re-adds Laplace noise at
the original public scales, and reads off an empirical order statistic.
No additional privacy budget is consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import numlin, randkit
from .hotelling import private_pooled_covariance, t_dp_statistic
from .mechanisms import (PrivacyBudget, PrivatizedSummary, compute_summary,
                         laplace_mean_scale, privatize_summaries)

ASYMPTOTIC = "asymptotic"
BOOTSTRAP = "bootstrap"


@dataclass(frozen=True)
class TestConfig:
    """Knobs of one private two-sample test run."""

    __test__ = False  # not a pytest case, despite the name

    epsilon: float
    bound_m: float
    alpha: float = 0.05
    bootstrap_b: int = 200
    threshold_kind: str = BOOTSTRAP
    seed: int = 0
    clamp: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if not self.bound_m > 0.0:
            raise ValueError("bound_m must be positive")
        if self.threshold_kind not in (ASYMPTOTIC, BOOTSTRAP):
            raise ValueError(f"unknown threshold kind {self.threshold_kind!r}")
        if self.bootstrap_b < 1 or math.floor((1.0 - self.alpha) * self.bootstrap_b) < 1:
            raise ValueError(
                f"bootstrap_b={self.bootstrap_b} too small for alpha={self.alpha}: "
                "need floor((1-alpha) B) >= 1"
            )


@dataclass(frozen=True)
class TestOutcome:
    """Result of one test: statistic, threshold, and the strict decision."""

    __test__ = False  # not a pytest case, despite the name

    statistic: float
    threshold: float
    threshold_kind: str
    reject: bool
    dim: int
    n1: int
    n2: int
    alpha: float
    epsilon: float
    budget_split: tuple

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "threshold": self.threshold,
            "threshold_kind": self.threshold_kind,
            "reject": self.reject,
            "dim": self.dim,
            "n1": self.n1,
            "n2": self.n2,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "budget_split": {
                "mean_x": self.budget_split[0],
                "mean_y": self.budget_split[1],
                "cov_x": self.budget_split[2],
                "cov_y": self.budget_split[3],
            },
        }


@lru_cache(maxsize=256)
def asymptotic_threshold(alpha: float, d: int) -> float:
    """(1 - alpha) quantile of the chi-squared distribution with d dof."""
    return randkit.chi2_quantile(1.0 - alpha, d)


def quantile_index(alpha: float, b: int) -> int:
    """1-based order-statistic index floor((1-alpha) B), clamped to [1, B]."""
    return min(b, max(1, math.floor((1.0 - alpha) * b)))


def bootstrap_threshold(rng: randkit.RngStream, ps: PrivatizedSummary,
                        cfg: TestConfig) -> float:
    """Empirical (1 - alpha) threshold from B resampled statistics.

    Each replicate draws means from N(0, cov_dp / n_i), adds fresh Laplace
    noise at the original release scales, and evaluates the statistic with
    the same corrected pooled matrix used for the observed statistic. The
    replicates are sorted, so the result does not depend on their order.
    """
    b = cfg.bootstrap_b
    if math.floor((1.0 - cfg.alpha) * b) < 1:
        raise ValueError("bootstrap_b too small for requested alpha")
    d = ps.dim
    pooled = private_pooled_covariance(ps)
    inv_root = numlin.inverse_sqrt_psd(pooled.matrix, floor=1e-12)
    root_x = numlin.psd_sqrt(np.asarray(ps.cov_x_dp) / ps.n1)
    root_y = numlin.psd_sqrt(np.asarray(ps.cov_y_dp) / ps.n2)

    gen = rng.generator
    x_star = gen.standard_normal((b, d)) @ root_x
    y_star = gen.standard_normal((b, d)) @ root_y
    scale_x = laplace_mean_scale(ps.n1, ps.bound_m, d, ps.budget.mean_x)
    scale_y = laplace_mean_scale(ps.n2, ps.bound_m, d, ps.budget.mean_y)
    if scale_x > 0.0:
        x_star = x_star + gen.laplace(0.0, scale_x, size=(b, d))
    if scale_y > 0.0:
        y_star = y_star + gen.laplace(0.0, scale_y, size=(b, d))

    z = (x_star - y_star) @ inv_root
    stats = (ps.n1 * ps.n2 / (ps.n1 + ps.n2)) * np.sum(z * z, axis=1)
    stats.sort()
    return float(stats[quantile_index(cfg.alpha, b) - 1])


def run_test(rng: randkit.RngStream, data_x, data_y,
             cfg: TestConfig) -> TestOutcome:
    """Full pipeline: summarize, privatize once, test against the threshold.

    The privacy budget is spent exactly once (inside the privatization);
    the statistic, the threshold, and the decision are post-processing of
    the four releases.
    """
    x = np.asarray(data_x, dtype=float)
    y = np.asarray(data_y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("data must be n-by-d matrices")
    if x.shape[1] != y.shape[1]:
        raise ValueError(
            f"samples disagree in dimension: {x.shape[1]} vs {y.shape[1]}"
        )

    sx = compute_summary(x, cfg.bound_m, clamp=cfg.clamp)
    sy = compute_summary(y, cfg.bound_m, clamp=cfg.clamp)
    budget = PrivacyBudget.even_split(cfg.epsilon)
    ps = privatize_summaries(rng.substream(1), sx, sy, budget)

    statistic = t_dp_statistic(ps)
    if cfg.threshold_kind == ASYMPTOTIC:
        threshold = asymptotic_threshold(cfg.alpha, ps.dim)
    else:
        threshold = bootstrap_threshold(rng.substream(2), ps, cfg)

    return TestOutcome(
        statistic=statistic,
        threshold=threshold,
        threshold_kind=cfg.threshold_kind,
        reject=bool(statistic > threshold),
        dim=ps.dim,
        n1=ps.n1,
        n2=ps.n2,
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        budget_split=budget.parts,
    )

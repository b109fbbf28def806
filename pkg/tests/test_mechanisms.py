import math

import numpy as np
import pytest

from dphotelling.errors import BoundViolationError
from dphotelling.mechanisms import (PRIVACY_OFF, PrivacyBudget, SampleSummary,
                                    compute_summary, ed_covariance,
                                    laplace_mean_scale, privatize_mean,
                                    privatize_summaries)
from dphotelling.numlin import jacobi_eigen
from dphotelling.randkit import RngStream
from oracles import folded_shift_laplace_cdf, ks_statistic_vec, laplace_cdf


class TestPrivacyBudget:
    def test_even_split_parts(self):
        b = PrivacyBudget.even_split(1.0)
        assert b.parts == (0.25, 0.25, 0.25, 0.25)

    def test_even_split_sums_exactly(self):
        for eps in (0.1, 0.3, 1.0, 4.0, 5.0, 1.0 / 3.0, math.pi, 1e-6, 1e6):
            b = PrivacyBudget.even_split(eps)
            assert math.fsum(b.parts) == eps

    def test_infinite_budget_allowed(self):
        b = PrivacyBudget.even_split(PRIVACY_OFF)
        assert math.fsum(b.parts) == math.inf

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            PrivacyBudget.even_split(0.0)
        with pytest.raises(ValueError):
            PrivacyBudget(1.0, 0.25, 0.25, 0.25, 0.0)

    def test_rejects_wrong_sum(self):
        with pytest.raises(ValueError, match="sum"):
            PrivacyBudget(1.0, 0.5, 0.25, 0.25, 0.25)


class TestComputeSummary:
    def test_identical_rows_zero_covariance(self):
        s = compute_summary(np.array([[0.3, -0.1], [0.3, -0.1]]), 1.0)
        assert np.array_equal(s.cov, np.zeros((2, 2)))
        assert np.array_equal(s.mean, [0.3, -0.1])

    def test_one_dim_hand_case(self):
        # (-1, 1): mean 0, variance (1/(2-1)) ((-1)^2 + 1^2) = 2
        s = compute_summary(np.array([[-1.0], [1.0]]), 1.0)
        assert s.mean[0] == 0.0
        assert s.cov[0, 0] == 2.0

    def test_covariance_psd(self):
        gen = np.random.default_rng(2)
        for _ in range(50):
            n = int(gen.integers(2, 20))
            d = int(gen.integers(1, 5))
            s = compute_summary(gen.uniform(-1.0, 1.0, (n, d)), 1.0)
            w = jacobi_eigen(s.cov).eigenvalues
            assert w[-1] >= -1e-12

    def test_requires_two_rows(self):
        with pytest.raises(ValueError, match="two"):
            compute_summary(np.array([[0.5]]), 1.0)

    def test_out_of_bounds_raises(self):
        with pytest.raises(BoundViolationError):
            compute_summary(np.array([[0.5], [1.5]]), 1.0)

    def test_clamp_clips_before_summary(self):
        data = np.array([[2.0], [-2.0], [0.5]])
        s = compute_summary(data, 1.0, clamp=True)
        ref = compute_summary(np.clip(data, -1.0, 1.0), 1.0)
        assert np.array_equal(s.mean, ref.mean)
        assert np.array_equal(s.cov, ref.cov)

    def test_accepts_one_dim_input(self):
        s = compute_summary(np.array([0.1, 0.2, 0.3]), 1.0)
        assert s.dim == 1


class TestPrivatizeMean:
    def test_privacy_off_is_identity(self):
        mean = np.array([0.1, -0.2, 0.05])
        out = privatize_mean(RngStream(0), mean, 100, 1.0, PRIVACY_OFF)
        assert np.array_equal(out, mean)

    def test_scale_formula_hand_case(self):
        # m=1, d=1, n=500, eps_part=1: 2*1*1 / (500*1) = 0.004
        assert laplace_mean_scale(500, 1.0, 1, 1.0) == 0.004

    def test_scale_formula_privacy_off(self):
        assert laplace_mean_scale(500, 1.0, 3, PRIVACY_OFF) == 0.0

    def test_noise_variance_identity(self):
        # Empirical per-coordinate variance of output - input is 2 scale^2.
        mean = np.array([0.2, -0.4])
        n, m, eps_part = 50, 1.0, 0.5
        scale = laplace_mean_scale(n, m, 2, eps_part)
        rng = RngStream(31)
        reps = 10**5
        noise = np.empty((reps, 2))
        for i in range(reps):
            noise[i] = privatize_mean(rng, mean, n, m, eps_part) - mean
        assert np.var(noise, axis=0) == pytest.approx(
            2.0 * scale * scale, rel=0.05)

    def test_bound_violation(self):
        with pytest.raises(BoundViolationError):
            privatize_mean(RngStream(0), [1.5], 10, 1.0, 1.0)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            privatize_mean(RngStream(0), [0.5], 10, 1.0, 0.0)


class TestEdCovariance:
    def test_privacy_off_recomposes_input(self):
        gen = np.random.default_rng(4)
        for d in (1, 2, 4, 6):
            b = gen.standard_normal((d, d))
            cov = b @ b.T / d
            out = ed_covariance(RngStream(0), cov, 50, 2.0, PRIVACY_OFF)
            assert np.linalg.norm(out - cov) <= 1e-8 * (1.0 + np.linalg.norm(cov))

    def test_one_dim_folded_laplace_shape(self):
        # After unscaling, the release is |var + L| with L centered Laplace
        # of scale (d m^2 / n) * (2 / eps_part); full budget since d = 1.
        var, n, m, eps = 0.5, 500, 1.0, 1.0
        scale = (m * m / n) * (2.0 / eps)
        reps = 10**5
        vals = np.empty(reps)
        for i in range(reps):
            vals[i] = ed_covariance(RngStream(7, i), [[var]], n, m, eps)[0, 0]
        assert np.min(vals) >= 0.0
        assert np.median(vals) == pytest.approx(var, abs=0.001)
        ks = ks_statistic_vec(vals,
                              lambda y: folded_shift_laplace_cdf(y, var, scale))
        assert ks <= 0.01

    def test_output_always_psd_and_symmetric(self):
        gen = np.random.default_rng(9)
        cases = [(1, 7000), (2, 2000), (3, 700), (4, 300)]
        for d, reps in cases:
            for i in range(reps):
                b = gen.standard_normal((d, d))
                cov = b @ b.T / d
                eps = float(gen.uniform(0.05, 6.0))
                n = int(gen.integers(2, 1000))
                out = ed_covariance(RngStream(d, i), cov, n, 1.5, eps)
                assert np.array_equal(out, out.T)
                w = jacobi_eigen(out).eigenvalues
                assert w[-1] >= -1e-12 * max(1.0, np.linalg.norm(out))

    def test_rejects_indefinite_input(self):
        with pytest.raises(ValueError, match="PSD"):
            ed_covariance(RngStream(0), np.diag([1.0, -0.5]), 10, 1.0, 1.0)

    def test_consistency_trend(self):
        # Fixed budget: the release error shrinks as the sample grows.
        from dphotelling.simbench import DesignSpec, generate
        spec = DesignSpec("uniform_cube", 3)
        medians = []
        for n in (100, 1000, 10000):
            errs = []
            for rep in range(200):
                rng = RngStream(42).substream(n, rep)
                x, _ = generate(rng.substream(0), spec, n, n)
                s = compute_summary(x, spec.bound_m)
                out = ed_covariance(rng.substream(1), s.cov, s.n,
                                    spec.bound_m, 0.25)
                errs.append(np.linalg.norm(out - np.eye(3)))
            medians.append(float(np.median(errs)))
        assert medians[0] > medians[1] > medians[2]
        assert medians[2] <= 0.1


class TestPrivatizeSummaries:
    @staticmethod
    def _summary_pair(seed=0, d=2, n1=40, n2=50, m=1.0):
        gen = np.random.default_rng(seed)
        sx = compute_summary(gen.uniform(-m, m, (n1, d)), m)
        sy = compute_summary(gen.uniform(-m, m, (n2, d)), m)
        return sx, sy

    def test_budget_audit_on_every_call(self):
        sx, sy = self._summary_pair()
        for eps in (0.1, 0.5, 1.0, 4.0, 1.0 / 3.0, math.pi):
            ps = privatize_summaries(RngStream(1), sx, sy,
                                     PrivacyBudget.even_split(eps))
            assert math.fsum(ps.budget.parts) == eps

    def test_privacy_off_reproduces_raw(self):
        sx, sy = self._summary_pair(seed=3)
        ps = privatize_summaries(RngStream(1), sx, sy,
                                 PrivacyBudget.even_split(PRIVACY_OFF))
        assert np.array_equal(ps.mean_x_dp, sx.mean)
        assert np.array_equal(ps.mean_y_dp, sy.mean)
        assert np.linalg.norm(ps.cov_x_dp - sx.cov) <= 1e-8
        assert np.linalg.norm(ps.cov_y_dp - sy.cov) <= 1e-8

    def test_mean_noise_distribution(self):
        # d=1, n1=n2=500, m=1, eps=4: mean_x noise is Laplace(0, 0.004).
        base = np.linspace(-0.9, 0.9, 500)[:, None]
        s = compute_summary(base, 1.0)
        budget = PrivacyBudget.even_split(4.0)
        reps = 10**5
        diffs = np.empty(reps)
        for i in range(reps):
            ps = privatize_summaries(RngStream(15, i), s, s, budget)
            diffs[i] = ps.mean_x_dp[0] - s.mean[0]
        assert ks_statistic_vec(diffs, lambda x: laplace_cdf(x, 0.004)) <= 0.01

    def test_dimension_mismatch_rejected(self):
        sx, _ = self._summary_pair(d=2)
        _, sy = self._summary_pair(d=3)
        with pytest.raises(ValueError, match="dimension"):
            privatize_summaries(RngStream(0), sx, sy,
                                PrivacyBudget.even_split(1.0))

    def test_bound_mismatch_rejected(self):
        sx, _ = self._summary_pair(m=1.0)
        _, sy = self._summary_pair(m=2.0)
        with pytest.raises(ValueError, match="bound"):
            privatize_summaries(RngStream(0), sx, sy,
                                PrivacyBudget.even_split(1.0))

    def test_releases_are_read_only(self):
        sx, sy = self._summary_pair()
        ps = privatize_summaries(RngStream(2), sx, sy,
                                 PrivacyBudget.even_split(1.0))
        with pytest.raises(ValueError):
            ps.mean_x_dp[0] = 99.0
        with pytest.raises(ValueError):
            ps.cov_x_dp[0, 0] = 99.0


class TestSampleSummaryType:
    def test_rejects_mean_outside_bound(self):
        with pytest.raises(BoundViolationError):
            SampleSummary(n=5, mean=np.array([1.2]),
                          cov=np.array([[0.1]]), bound_m=1.0)

    def test_rejects_asymmetric_cov(self):
        with pytest.raises(ValueError, match="symmetric"):
            SampleSummary(n=5, mean=np.zeros(2),
                          cov=np.array([[1.0, 0.3], [0.0, 1.0]]), bound_m=1.0)

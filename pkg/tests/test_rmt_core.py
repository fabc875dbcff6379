"""Fixed-point solvers, closed-form risks, penalty search, effective rank.

The hand-derived oracle values used here come from scalar reductions of the
isotropic case: with identity feature covariance and feature count equal to
the sample count, the order parameter solves delta^2 + delta - 1/lambda = 0
scaled by lambda, giving delta = (sqrt(5)-1)/2 at lambda = 1.
"""

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmt_repr import (AlphaAtOne, GroundTruth, alpha_from_spectrum,
                      generate_theta, moments_linear_map, optimal_lambda,
                      rank_effective, risk_esn, risk_general, risk_ridge,
                      solve_fixed_point, solve_fixed_point_spectral)

from conftest import random_psd

# scalar reductions of the isotropic fixed point, frozen ahead of the
# implementation
GOLDEN_DELTA = 0.6180339887498949          # (sqrt(5) - 1) / 2
ALPHA_AT_GOLDEN = 0.14589803375031546      # (1 + (1 + delta))^-2
DELTA_LAMBDA_TEN = 0.0916079783099616      # root of 10 d^2 + 10 d - 1
NOISE_ONLY_TOTAL = 1.1708203932499369      # 1 / (1 - alpha)
ISO_BIAS_SQ = 0.4472135954999579           # kappa^2/(1+kappa)^2/(1-alpha)


class TestFixedPointMatrix:
    def test_zero_covariance(self):
        sol = solve_fixed_point(np.zeros((5, 5)), lam=1.0, N=5)
        assert sol.delta == 0.0
        assert sol.alpha == 0.0
        assert sol.kappa == pytest.approx(1.0)

    def test_golden_ratio_oracle(self):
        sol = solve_fixed_point(np.eye(40), lam=1.0, N=40)
        assert sol.delta == pytest.approx(GOLDEN_DELTA, abs=1e-10)
        assert sol.alpha == pytest.approx(ALPHA_AT_GOLDEN, abs=1e-10)

    def test_lambda_ten_oracle(self):
        sol = solve_fixed_point(np.eye(30), lam=10.0, N=30)
        assert sol.delta == pytest.approx(DELTA_LAMBDA_TEN, abs=1e-10)

    def test_kappa_consistency(self):
        sol = solve_fixed_point(np.eye(25), lam=0.3, N=50)
        assert sol.kappa == pytest.approx(0.3 * (1 + sol.delta), rel=1e-12)

    def test_residual_small_at_return(self, rng):
        sigma_z = random_psd(rng, 30, cond=50)
        sol = solve_fixed_point(sigma_z, lam=0.05, N=20)
        # re-evaluate the defining map at the returned delta
        s = np.linalg.eigvalsh(sigma_z)
        rhs = np.sum(s / (s / (1 + sol.delta) + 0.05)) / 20
        assert abs(rhs - sol.delta) <= 2e-10 * (1 + sol.delta)


class TestFixedPointSpectral:
    def test_zero_spectrum(self):
        sol = solve_fixed_point_spectral(np.zeros(8), lam=2.0, N=10)
        assert sol.delta == 0.0
        assert sol.kappa == pytest.approx(2.0)
        assert sol.alpha == 0.0

    def test_flat_spectrum_matches_matrix_oracle(self):
        sol = solve_fixed_point_spectral(np.ones(20), lam=1.0, N=20)
        assert sol.delta == pytest.approx(GOLDEN_DELTA, abs=1e-10)
        assert sol.kappa == pytest.approx(1.0 + GOLDEN_DELTA, abs=1e-10)

    def test_half_ratio_hand_oracle(self):
        # T/N = 1/2, lambda = 1/2, flat spectrum: delta^2 + 2 delta - 1 = 0
        sol = solve_fixed_point_spectral(np.ones(10), lam=0.5, N=20)
        assert sol.delta == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-10)

    def test_agrees_with_matrix_solver_on_padded_diagonal(self):
        mu = np.array([3.0, 1.0, 0.25])
        padded = np.diag(np.concatenate([mu, np.zeros(5)]))
        a = solve_fixed_point_spectral(mu, lam=0.7, N=6)
        b = solve_fixed_point(padded, lam=0.7, N=6)
        assert a.delta == pytest.approx(b.delta, abs=1e-9)
        assert a.alpha == pytest.approx(b.alpha, abs=1e-9)

    def test_near_critical_penalty_converges(self):
        # the interpolation point with a tiny penalty: Picard alone is very
        # slow here, the solver must still return with a small residual
        sol = solve_fixed_point_spectral(np.ones(100), lam=1e-6, N=100)
        kappa = sol.kappa
        rhs = 100 * 1.0 / (1.0 + kappa) / 100
        assert sol.delta / (1 + sol.delta) == pytest.approx(rhs, abs=1e-8)
        assert sol.alpha < 1.0

    def test_alpha_at_one_raised_beyond_threshold(self):
        with pytest.raises(AlphaAtOne):
            solve_fixed_point_spectral(np.ones(100), lam=1e-20, N=100)

    def test_literal_numerator_variant(self):
        mu = np.array([2.0, 1.0, 0.5])
        sol = solve_fixed_point_spectral(mu, lam=0.3, N=6)
        squared = alpha_from_spectrum(mu, sol.kappa, 6)
        linear = alpha_from_spectrum(mu, sol.kappa, 6, numerator="linear")
        assert squared == pytest.approx(sol.alpha, rel=1e-12)
        npt.assert_allclose(squared,
                            np.sum(mu ** 2 / (mu + sol.kappa) ** 2) / 6,
                            rtol=1e-12)
        npt.assert_allclose(linear,
                            np.sum(mu / (mu + sol.kappa) ** 2) / 6,
                            rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=1, max_value=30),
           st.integers(min_value=1, max_value=60),
           st.floats(min_value=-2.0, max_value=2.0),
           st.integers(min_value=0, max_value=2 ** 31 - 1))
    def test_property_solution_wellformed(self, T, N, log_lam, seed):
        g = np.random.default_rng(seed)
        mu = g.uniform(0.0, 5.0, size=T)
        lam = 10.0 ** log_lam
        sol = solve_fixed_point_spectral(mu, lam=lam, N=N)
        assert sol.delta >= 0.0
        assert 0.0 <= sol.alpha < 1.0
        assert sol.kappa == pytest.approx(lam * (1 + sol.delta), rel=1e-12)
        # alpha is always strictly below delta/(1+delta) + tolerance
        assert sol.alpha <= sol.delta / (1 + sol.delta) + 1e-12

    def test_delta_monotone_in_lambda_and_ratio(self):
        mu = np.linspace(0.2, 3.0, 25)
        deltas = [solve_fixed_point_spectral(mu, lam, N=50).delta
                  for lam in (0.01, 0.1, 1.0, 10.0)]
        assert np.all(np.diff(deltas) < 0)
        # increasing the feature count at fixed N raises delta
        deltas_n = [solve_fixed_point_spectral(np.ones(T), 0.5, N=50).delta
                    for T in (10, 25, 50, 100)]
        assert np.all(np.diff(deltas_n) > 0)

    def test_rank_limit_of_alpha(self):
        # as the penalty vanishes with N greater than the spectrum size,
        # alpha approaches (number of nonzero modes) / N
        mu = np.array([4.0, 2.0, 1.0, 0.5, 0.25])
        for N in (10, 20):
            sol = solve_fixed_point_spectral(mu, lam=1e-9, N=N)
            assert sol.alpha == pytest.approx(len(mu) / N, abs=1e-3)


class TestRiskGeneral:
    def test_noise_only_oracle(self):
        truth = GroundTruth(theta=np.zeros((10, 1)), sigma_noise=1.0, q=1)
        m = moments_linear_map(np.eye(10), None)
        r = risk_general(m, truth, lam=1.0, N=10)
        assert r.bias_sq == 0.0
        assert r.total == pytest.approx(NOISE_ONLY_TOTAL, abs=1e-10)

    def test_infinite_regularization_limit_multi_output(self, rng):
        # the null-predictor limit must equal the per-coordinate signal
        # power Tr(Theta*^T Sigma_u Theta*)/q, matching the simulated
        # risk's mean-squared-error-per-output convention
        sigma_u = random_psd(rng, 8)
        theta = rng.standard_normal((8, 2))
        truth = GroundTruth(theta=theta, sigma_noise=0.3, q=2)
        m = moments_linear_map(sigma_u, None)
        r = risk_general(m, truth, lam=1e8, N=20)
        target_bias = np.trace(theta.T @ sigma_u @ theta) / 2
        assert r.bias_sq == pytest.approx(target_bias, rel=1e-6)
        assert r.variance <= 1e-6

    def test_matches_ridge_on_identity_features(self, rng):
        sigma_u = random_psd(rng, 12)
        theta = rng.standard_normal((12, 1))
        truth = GroundTruth(theta=theta, sigma_noise=0.5, q=1)
        m = moments_linear_map(sigma_u, None)
        a = risk_general(m, truth, lam=0.2, N=30)
        b = risk_ridge(sigma_u, truth, lam=0.2, N=30)
        assert a.total == pytest.approx(b.total, rel=1e-9)
        assert a.bias_sq == pytest.approx(b.bias_sq, rel=1e-9, abs=1e-12)

    def test_breakdown_sums(self, rng):
        sigma_u = random_psd(rng, 6)
        theta = rng.standard_normal((6, 1))
        truth = GroundTruth(theta=theta, sigma_noise=0.4, q=1)
        S = rng.standard_normal((9, 6))
        r = risk_general(moments_linear_map(sigma_u, S), truth, lam=0.5,
                         N=12)
        assert r.total == pytest.approx(r.bias_sq + r.variance + r.noise,
                                        rel=1e-12)
        assert r.bias_sq >= 0 and r.variance >= 0
        assert r.noise == pytest.approx(0.16)


class TestRiskSpectralRoutes:
    def test_esn_at_boundary_memory_equals_ridge(self, rng):
        # a contraction parameter of exactly one makes every memory mode
        # weightless, reducing the reservoir formula to plain ridge
        sigma_u = random_psd(rng, 9)
        theta = rng.standard_normal((9, 1))
        truth = GroundTruth(theta=theta, sigma_noise=0.6, q=1)
        a = risk_esn(sigma_u, truth, phi=1.0, T=9, lam=0.4, N=18)
        b = risk_ridge(sigma_u, truth, lam=0.4, N=18)
        assert a.total == pytest.approx(b.total, rel=1e-9)

    def test_esn_no_signal(self):
        truth = GroundTruth(theta=np.zeros((6, 1)), sigma_noise=1.0, q=1)
        r = risk_esn(np.eye(6), truth, phi=0.5, T=6, lam=0.1, N=12)
        assert r.bias_sq == 0.0
        assert r.total == pytest.approx(r.variance + 1.0)

    def test_iso_bias_oracle(self):
        theta = np.zeros((7, 1))
        theta[0, 0] = 1.0
        truth = GroundTruth(theta=theta, sigma_noise=1.0, q=1)
        r = risk_ridge(np.eye(7), truth, lam=1.0, N=7)
        assert r.bias_sq == pytest.approx(ISO_BIAS_SQ, abs=1e-10)

    def test_ridge_null_predictor_limit(self, rng):
        sigma_u = random_psd(rng, 5)
        theta = rng.standard_normal((5, 1))
        truth = GroundTruth(theta=theta, sigma_noise=0.2, q=1)
        r = risk_ridge(sigma_u, truth, lam=1e8, N=10)
        target = float((theta.T @ sigma_u @ theta).item()) + 0.04
        assert r.total == pytest.approx(target, rel=1e-6)

    def test_esn_matches_general_formula_at_large_reservoir(self):
        # sampled reservoir moments against the reservoir-limit formula
        from rmt_repr import (ReservoirParams, build_controllability_matrix,
                              sample_reservoir)
        T, phi, lam, N = 6, 0.7, 0.2, 30
        sigma_u = np.eye(T)
        theta = generate_theta("decay", T, rho=0.8)
        truth = GroundTruth(theta=theta, sigma_noise=0.5, q=1)
        params = ReservoirParams(n=1500, T=T, phi=phi,
                                 activation="identity",
                                 normalization="asymptotic")
        W, w_in = sample_reservoir(params, seed=77)
        S = build_controllability_matrix(W, w_in, T)
        general = risk_general(moments_linear_map(sigma_u, S), truth, lam, N)
        spectral = risk_esn(sigma_u, truth, phi, T, lam, N)
        assert general.total == pytest.approx(spectral.total, rel=0.02)

    def test_risk_continuous_in_lambda(self, rng):
        sigma_u = random_psd(rng, 10)
        theta = rng.standard_normal((10, 1))
        truth = GroundTruth(theta=theta, sigma_noise=0.4, q=1)
        lams = np.logspace(-4, 2, 80)
        totals = np.array([risk_ridge(sigma_u, truth, l, 20).total
                           for l in lams])
        # no jumps: successive values differ by a bounded factor
        assert np.all(np.abs(np.diff(np.log(totals))) < 0.5)


class TestOptimalLambda:
    def test_pure_noise_pushes_to_max(self):
        truth = GroundTruth(theta=np.zeros((5, 1)), sigma_noise=1.0, q=1)
        res = optimal_lambda(
            lambda l: risk_ridge(np.eye(5), truth, l, 10).total)
        assert res.lambda_star == pytest.approx(1e3, rel=0.05)

    def test_matches_grid_argmin_isotropic(self):
        theta = np.full((8, 1), 1.0 / np.sqrt(8.0))
        truth = GroundTruth(theta=theta, sigma_noise=0.7, q=1)
        res = optimal_lambda(
            lambda l: risk_ridge(np.eye(8), truth, l, 16).total)
        cell = np.log(1e3 / 1e-6) / 199  # default 200-point log grid spacing
        assert abs(np.log(res.lambda_star / res.grid_lambda)) \
            <= cell * (1 + 1e-9)
        assert not res.used_grid_fallback

    def test_risk_at_optimum_not_above_grid(self):
        theta = np.full((6, 1), 0.5)
        truth = GroundTruth(theta=theta, sigma_noise=0.5, q=1)
        fn = lambda l: risk_ridge(np.eye(6), truth, l, 12).total
        res = optimal_lambda(fn)
        assert res.risk_star <= res.grid_risk + 1e-9


class TestRankEffective:
    def test_full_rank(self):
        assert rank_effective(np.array([4.0, 2.0, 1.0])) == 3

    def test_geometric_spectrum_truncates(self):
        T = 60
        mu = 0.5 ** -(np.arange(1, T + 1) - T).astype(float)
        mu = np.sort(mu)[::-1]
        assert rank_effective(mu) == 40

    def test_zero_vector(self):
        assert rank_effective(np.zeros(4)) == 0

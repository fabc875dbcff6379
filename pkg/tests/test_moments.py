"""Population second moments of feature maps: closed form and Monte Carlo."""

import numpy as np
import numpy.testing as npt
import pytest

from rmt_repr import (build_controllability_matrix, linear_esn_map,
                      moments_linear_map, moments_monte_carlo,
                      sample_reservoir)
from rmt_repr.representation import ReservoirParams, identity_map

from conftest import random_psd


class TestMomentsLinearMap:
    def test_identity_map_returns_input_covariance(self, rng):
        sigma_u = random_psd(rng, 6)
        m = moments_linear_map(sigma_u, None)
        npt.assert_array_equal(m.sigma_z, sigma_u)
        npt.assert_array_equal(m.sigma_uz, sigma_u)
        npt.assert_array_equal(m.sigma_u, sigma_u)
        m2 = moments_linear_map(sigma_u, np.eye(6))
        npt.assert_allclose(m2.sigma_z, sigma_u, atol=1e-15)

    def test_orthonormal_rows_isometry(self, rng):
        A = rng.standard_normal((8, 8))
        Q, _ = np.linalg.qr(A)
        S = Q[:, :8].T[:5]              # 5 orthonormal rows
        m = moments_linear_map(np.eye(8), S)
        npt.assert_allclose(m.sigma_z, np.eye(5), atol=1e-12)

    def test_exact_products(self, rng):
        sigma_u = random_psd(rng, 4)
        S = rng.standard_normal((7, 4))
        m = moments_linear_map(sigma_u, S)
        npt.assert_allclose(m.sigma_z, S @ sigma_u @ S.T, atol=1e-14)
        npt.assert_allclose(m.sigma_uz, sigma_u @ S.T, atol=1e-14)

    def test_symmetrized_psd(self, rng):
        sigma_u = random_psd(rng, 5)
        S = rng.standard_normal((9, 5))
        m = moments_linear_map(sigma_u, S)
        npt.assert_allclose(m.sigma_z, m.sigma_z.T, atol=1e-14)
        assert np.linalg.eigvalsh(m.sigma_z).min() >= -1e-10


class TestMomentsMonteCarlo:
    def test_identity_isotropic(self):
        m = moments_monte_carlo(identity_map(4), np.eye(4), samples=100_000,
                                seed=0)
        npt.assert_allclose(m.sigma_z, np.eye(4), atol=5e-2)
        npt.assert_allclose(m.sigma_uz, np.eye(4), atol=5e-2)

    def test_linear_esn_matches_closed_form(self):
        params = ReservoirParams(n=40, T=6, phi=0.7, activation="identity",
                                 normalization="exact")
        W, w_in = sample_reservoir(params, seed=4)
        S = build_controllability_matrix(W, w_in, 6)
        sigma_u = np.eye(6)
        exact = moments_linear_map(sigma_u, S)
        samples = 40_000
        mc = moments_monte_carlo(linear_esn_map(S), sigma_u,
                                 samples=samples, seed=1)
        # per-entry standard error of a Gaussian product moment is bounded by
        # sqrt(2)*max_var/sqrt(samples); the MAX over ~2000 entries needs the
        # extreme-value factor, so allow five envelopes
        scale = np.abs(np.diag(exact.sigma_z)).max()
        tol = 5.0 * 2.0 * scale / np.sqrt(samples)
        assert np.max(np.abs(mc.sigma_z - exact.sigma_z)) <= tol
        assert np.max(np.abs(mc.sigma_uz - exact.sigma_uz)) <= tol

    def test_error_halves_when_samples_quadruple(self):
        sigma_u = np.eye(5)
        spec = identity_map(5)
        errs = []
        for samples in (4000, 16000):
            m = moments_monte_carlo(spec, sigma_u, samples=samples, seed=7)
            errs.append(np.linalg.norm(m.sigma_z - sigma_u))
        ratio = errs[1] / errs[0]
        # exact halving would give 0.5; allow generous statistical slack
        assert 0.2 <= ratio <= 0.85

    def test_deterministic_given_seed(self):
        sigma_u = np.eye(4)
        a = moments_monte_carlo(identity_map(4), sigma_u, samples=8000,
                                seed=3)
        b = moments_monte_carlo(identity_map(4), sigma_u, samples=8000,
                                seed=3)
        npt.assert_array_equal(a.sigma_z, b.sigma_z)
        npt.assert_array_equal(a.sigma_uz, b.sigma_uz)

    def test_cauchy_schwarz_operator_bound(self, rng):
        sigma_u = random_psd(rng, 5)
        S = rng.standard_normal((8, 5))
        m = moments_monte_carlo(linear_esn_map(S), sigma_u, samples=20_000,
                                seed=9)
        lhs = np.linalg.norm(m.sigma_uz, 2)
        rhs = (np.linalg.norm(m.sigma_u, 2) ** 0.5
               * np.linalg.norm(m.sigma_z, 2) ** 0.5)
        assert lhs <= rhs + 0.05 * rhs

    def test_provenance_recorded(self):
        m = moments_monte_carlo(identity_map(3), np.eye(3), samples=2000,
                                seed=5)
        assert m.provenance.startswith("monte_carlo")
        exact = moments_linear_map(np.eye(3), np.eye(3))
        assert exact.provenance == "closed_form"

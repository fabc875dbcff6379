"""Feature maps: reservoir sampling, spectral radius, the closed-form
reservoir state matrix, the recurrence, and batched application."""

import numpy as np
import numpy.testing as npt
import pytest

from rmt_repr import (DimMismatch, FeatureMapSpec, InvalidParam,
                      ReservoirParams, apply_feature_map,
                      build_controllability_matrix, esn_map, identity_map,
                      linear_esn_map, realize_map, sample_reservoir,
                      spectral_radius)
from rmt_repr.representation import (ProjectionParams, nonlinear_esn_map,
                                     projection_from_params, projection_map,
                                     simulate_reservoir)


def _params(n, T=5, phi=0.7, activation="identity", normalization="exact"):
    return ReservoirParams(n=n, T=T, phi=phi, activation=activation,
                           normalization=normalization)


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([0.2, -0.7])) == pytest.approx(0.7)

    def test_rotation_complex_pair(self):
        R = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert spectral_radius(R) == pytest.approx(1.0)

    def test_zero_matrix(self):
        assert spectral_radius(np.zeros((3, 3))) == 0.0

    def test_large_matrix_arpack_agrees_with_dense(self, rng):
        W = rng.standard_normal((700, 700)) / np.sqrt(700)
        dense = float(np.max(np.abs(np.linalg.eigvals(W))))
        assert spectral_radius(W) == pytest.approx(dense, rel=1e-6)


class TestSampleReservoir:
    def test_deterministic_given_seed(self):
        a = sample_reservoir(_params(50), seed=9)
        b = sample_reservoir(_params(50), seed=9)
        npt.assert_array_equal(a[0], b[0])
        npt.assert_array_equal(a[1], b[1])

    def test_scalar_reservoir_magnitude(self):
        # n=1: the exact normalizer divides by |entry|, leaving |W| equal to
        # the inverse square root of the contraction parameter
        for seed in range(5):
            W, w_in = sample_reservoir(_params(1, phi=0.25), seed=seed)
            assert abs(W[0, 0]) == pytest.approx(1.0 / np.sqrt(0.25))

    @pytest.mark.parametrize("n", [10, 100, 500])
    @pytest.mark.parametrize("phi", [0.3, 0.6, 0.9])
    def test_exact_mode_spectral_radius(self, n, phi):
        W, _ = sample_reservoir(_params(n, phi=phi), seed=3)
        assert spectral_radius(W) == pytest.approx(phi ** -0.5, rel=1e-6)

    def test_asymptotic_mode_close_to_exact_at_large_n(self):
        # the sqrt(n) normalizer converges to the spectral radius, so the two
        # modes agree up to the spectral-edge fluctuation
        W, _ = sample_reservoir(_params(1000, phi=0.5,
                                        normalization="asymptotic"), seed=0)
        assert spectral_radius(W) == pytest.approx(0.5 ** -0.5, rel=0.1)

    def test_input_vector_scaling(self):
        _, w_in = sample_reservoir(_params(4000), seed=1)
        # entries i.i.d. with variance 1/n => unit norm in the limit
        assert np.linalg.norm(w_in) == pytest.approx(1.0, abs=0.05)

    def test_invalid_phi(self):
        with pytest.raises(InvalidParam):
            sample_reservoir(_params(10, phi=1.0), seed=0)


class TestControllabilityMatrix:
    def test_single_column_is_input_vector(self, rng):
        W = rng.standard_normal((4, 4))
        w_in = rng.standard_normal(4)
        S = build_controllability_matrix(W, w_in, 1)
        npt.assert_allclose(S, w_in.reshape(4, 1))

    def test_two_columns(self, rng):
        W = rng.standard_normal((4, 4))
        w_in = rng.standard_normal(4)
        S = build_controllability_matrix(W, w_in, 2)
        npt.assert_allclose(S[:, 0], W @ w_in)
        npt.assert_allclose(S[:, 1], w_in)

    def test_zero_recurrence(self, rng):
        w_in = rng.standard_normal(3)
        S = build_controllability_matrix(np.zeros((3, 3)), w_in, 3)
        npt.assert_allclose(S[:, :2], 0.0)
        npt.assert_allclose(S[:, 2], w_in)

    def test_dim_mismatch(self, rng):
        with pytest.raises(DimMismatch):
            build_controllability_matrix(np.zeros((3, 3)),
                                         np.zeros(4), 2)


class TestSimulateReservoir:
    def test_memoryless(self, rng):
        w_in = rng.standard_normal(6)
        u = rng.standard_normal(4)
        z = simulate_reservoir(np.zeros((6, 6)), w_in, u, "identity")
        npt.assert_allclose(z, u[-1] * w_in)

    def test_single_step_tanh(self, rng):
        w_in = rng.standard_normal(5)
        u = np.array([0.7])
        z = simulate_reservoir(np.zeros((5, 5)), w_in, u, "tanh")
        npt.assert_allclose(z, np.tanh(0.7 * w_in))

    def test_identity_matches_closed_form(self):
        for seed in range(10):
            W, w_in = sample_reservoir(_params(30, T=8, phi=0.8), seed=seed)
            g = np.random.default_rng(seed)
            u = g.standard_normal(8)
            S = build_controllability_matrix(W, w_in, 8)
            z = simulate_reservoir(W, w_in, u, "identity")
            npt.assert_allclose(z, S @ u, rtol=1e-9, atol=1e-12)

    def test_tanh_states_bounded(self, rng):
        W, w_in = sample_reservoir(_params(20, T=12, phi=0.9), seed=2)
        u = 5.0 * rng.standard_normal(12)
        z = simulate_reservoir(W, w_in, u, "tanh")
        assert np.all(np.abs(z) <= 1.0)


class TestApplyFeatureMap:
    def test_identity_returns_input(self, rng):
        U = rng.standard_normal((5, 7))
        npt.assert_array_equal(apply_feature_map(identity_map(5), U), U)

    def test_linear_esn_is_matrix_product(self, rng):
        W, w_in = sample_reservoir(_params(10, T=4), seed=5)
        S = build_controllability_matrix(W, w_in, 4)
        U = rng.standard_normal((4, 6))
        npt.assert_allclose(apply_feature_map(linear_esn_map(S), U), S @ U)

    def test_nonlinear_identity_reduces_to_linear(self, rng):
        W, w_in = sample_reservoir(_params(12, T=5), seed=6)
        S = build_controllability_matrix(W, w_in, 5)
        U = rng.standard_normal((5, 3))
        Z_lin = apply_feature_map(linear_esn_map(S), U)
        Z_rec = apply_feature_map(nonlinear_esn_map(W, w_in, "identity"), U)
        npt.assert_allclose(Z_rec, Z_lin, rtol=1e-9, atol=1e-12)

    def test_columnwise_permutation_equivariance(self, rng):
        spec = realize_map(projection_from_params(
            ProjectionParams(n=8, T=5)), seed=11)
        U = rng.standard_normal((5, 9))
        perm = rng.permutation(9)
        npt.assert_array_equal(apply_feature_map(spec, U)[:, perm],
                               apply_feature_map(spec, U[:, perm]))

    def test_row_count_mismatch(self, rng):
        with pytest.raises(DimMismatch):
            apply_feature_map(identity_map(5), rng.standard_normal((4, 3)))

    def test_identity_map_spec_invariant(self):
        spec = identity_map(7)
        assert spec.n_features == 7

    def test_projection_variance_default(self):
        # projection entries default to variance 1/T: feature norms stay
        # unit-order regardless of T
        spec = realize_map(projection_from_params(
            ProjectionParams(n=4000, T=64)), seed=3)
        var = spec.matrix.var()
        assert var == pytest.approx(1.0 / 64, rel=0.1)

    def test_esn_map_realization_matches_components(self):
        params = _params(15, T=6, phi=0.6)
        spec = realize_map(esn_map(params), seed=21)
        W, w_in = sample_reservoir(params, seed=21)
        S = build_controllability_matrix(W, w_in, 6)
        npt.assert_allclose(spec.matrix, S)

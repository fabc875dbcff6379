"""Monte Carlo simulation engine.

Samples datasets from the noisy linear model, fits the ridge readout,
estimates out-of-sample risk, and averages resolvents for
deterministic-equivalent validation.

Trial independence and reproducibility: every trial derives its own 64-bit
seed from (master seed, trial index) and all of its randomness — training
data, test data, resampled map weights — flows from that. Trials can
therefore run on any number of threads and the per-trial risk vector comes
out identical to the serial run.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .covariance import GroundTruth, matrix_sqrt
from .errors import DimMismatch, InvalidParam, NumericalFailure
from .moments import PopulationMoments, moments_linear_map
from .representation import FeatureMapSpec, apply_feature_map, realize_map
from .rng import NS_DATA, NS_REP, NS_TEST, NS_TRIAL, child_seed, resolve_threads, stream

__all__ = [
    "Dataset",
    "RidgeModel",
    "EmpiricalRisk",
    "sample_dataset",
    "ridge_fit",
    "conditional_risk_linear",
    "empirical_risk_mc",
    "resolvent_mean",
]


@dataclass(frozen=True)
class Dataset:
    """One draw of the noisy linear model: Y = Theta*^T U + E."""

    U: np.ndarray          # T x N inputs
    Y: np.ndarray          # q x N targets
    seed: int
    sigma_u_ref: Optional[np.ndarray] = None
    theta_ref: Optional[GroundTruth] = None


@dataclass(frozen=True)
class RidgeModel:
    """Fitted readout Ŵ = (1/N) Y Z^T (Z Z^T / N + lambda I)^-1."""

    w_out: np.ndarray      # q x n
    lam: float
    n: int
    N: int


@dataclass(frozen=True)
class EmpiricalRisk:
    """Monte Carlo risk estimate: mean of per_trial with its standard error."""

    mean: float
    std_error: float
    trials: int
    per_trial: np.ndarray


def sample_dataset(sigma_u: np.ndarray, truth: GroundTruth, N: int,
                   seed: int) -> Dataset:
    """Draw U (T x N, columns N(0, Sigma_u)) and Y = Theta*^T U + sigma E."""
    if N < 1:
        raise InvalidParam("N must be >= 1")
    sigma_u = np.asarray(sigma_u, dtype=float)
    root = matrix_sqrt(sigma_u)
    T = sigma_u.shape[0]
    g = stream(seed, NS_DATA, 0)
    U = root @ g.standard_normal((T, N))
    E = g.standard_normal((truth.q, N))
    Y = truth.theta.T @ U + truth.sigma_noise * E
    return Dataset(U=U, Y=Y, seed=seed, sigma_u_ref=sigma_u, theta_ref=truth)


def _solve_spd(A: np.ndarray, B: np.ndarray, shift_floor: float) -> np.ndarray:
    """Solve A X = B for symmetric A that is PSD-plus-shift in exact math.

    Cholesky first; when rounding has pushed A indefinite (which happens for
    feature Grams spanning many orders of magnitude plus a tiny ridge), fall
    back to an eigendecomposition with eigenvalues clamped to the known lower
    bound ``shift_floor``.
    """
    try:
        c = scipy.linalg.cho_factor(A, check_finite=False)
        return scipy.linalg.cho_solve(c, B, check_finite=False)
    except scipy.linalg.LinAlgError:
        pass
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"ridge system factorization failed: {exc}") from exc
    w = np.maximum(w, shift_floor)
    return V @ ((V.T @ B) / w[:, None])


def ridge_fit(Z: np.ndarray, Y: np.ndarray, lam: float) -> RidgeModel:
    """Fit the ridge readout by a stable factorization (never an inverse).

    Solves the n x n system when n <= N and the equivalent N x N dual system
    Ŵ = Y (Z^T Z + N lambda I)^-1 Z^T when n > N (push-through identity),
    so the cost is O(min(n, N)^3) plus matrix products.
    """
    if lam <= 0:
        raise InvalidParam("lambda must be positive")
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, N = Z.shape
    if Y.shape[1] != N:
        raise DimMismatch("Z and Y must agree on the sample count")
    if n <= N:
        A = Z @ Z.T / N
        A[np.diag_indices_from(A)] += lam
        X = _solve_spd(A, Z @ Y.T / N, shift_floor=lam)   # n x q
        w_out = X.T
    else:
        G = Z.T @ Z
        G[np.diag_indices_from(G)] += N * lam
        H = _solve_spd(G, Y.T, shift_floor=N * lam)       # N x q
        w_out = (Z @ H).T
    return RidgeModel(w_out=w_out, lam=lam, n=n, N=N)


def ridge_fit_input_basis(S: np.ndarray, U: np.ndarray, Y: np.ndarray,
                          lam: float) -> np.ndarray:
    """Ridge readout for features z = S u, solved in the input basis.

    For a linear map with n >= T the ridge fit in feature space is, exactly,
    a generalized ridge over the T-dimensional input:

        c = argmin (1/N) ||Y - c^T U||_F^2 + lam * c^T (S^T S)^-1 c,

    and the prediction map is u -> c^T u (so c = Ŵ S for the feature-space
    solution Ŵ). Feature-space covariances of reservoirs with long memory
    span many orders of magnitude, which makes the n x n (or N x N) normal
    equations singular to working precision; here every factored matrix is
    O(1)-conditioned because S^T S is inverted through its diagonal scaling
    (the scaled matrix has unit diagonal) and the data Gram U U^T / N is
    well-behaved. Returns the q x T input-space readout c^T.
    """
    if lam <= 0:
        raise InvalidParam("lambda must be positive")
    S = np.asarray(S, dtype=float)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, T = S.shape
    if n < T:
        raise InvalidParam(
            "input-basis ridge needs at least as many features as input "
            f"dimensions (got {n} features for T={T})")
    if U.shape[0] != T or U.shape[1] != Y.shape[1]:
        raise DimMismatch("S, U, Y dimensions are inconsistent")
    N = U.shape[1]
    G = S.T @ S
    d = np.diag(G).copy()
    if np.any(d <= 0):
        raise NumericalFailure("feature map has a zero column; S^T S singular")
    scale = 1.0 / np.sqrt(d)
    G_scaled = G * scale[:, None] * scale[None, :]
    G_inv = _solve_spd(G_scaled, np.diag(scale), shift_floor=1e-12)
    G_inv *= scale[:, None]
    A = U @ U.T / N + lam * 0.5 * (G_inv + G_inv.T)
    X = _solve_spd(A, U @ Y.T / N, shift_floor=lam / float(np.max(d)))
    return X.T


def conditional_risk_linear(w_out: np.ndarray, S: Optional[np.ndarray],
                            sigma_u: np.ndarray, truth: GroundTruth) -> float:
    """Exact out-of-sample risk of a fixed readout under a linear map z = S u.

    Integrates the test expectation in closed form (Gaussian moments):

        R = (1/q) [ Tr(Theta*^T Sigma_u Theta*) - 2 Tr(Theta*^T Sigma_u M^T)
                    + Tr(M Sigma_u M^T) ] + sigma^2,   M = Ŵ S.

    S = None means the identity map. This is the variance-reduction path of
    the Monte Carlo engine: the only randomness left is the training draw.
    """
    M = w_out if S is None else w_out @ S          # q x T
    t_y = float(np.sum(truth.theta * (sigma_u @ truth.theta)))
    t_c = float(np.sum(truth.theta * (sigma_u @ M.T)))
    t_z = float(np.sum(M * (M @ sigma_u)))
    return (t_y - 2.0 * t_c + t_z) / truth.q + truth.sigma_noise ** 2


def _map_matrix_for_conditional(spec: FeatureMapSpec) -> Optional[np.ndarray]:
    if spec.kind == "identity":
        return None
    if spec.kind in ("random_projection", "linear_esn"):
        return spec.matrix
    raise InvalidParam(
        "exact_test conditional risk requires a linear feature map; "
        f"got {spec.kind!r}"
    )


def empirical_risk_mc(sigma_u: np.ndarray, truth: GroundTruth,
                      map_spec: FeatureMapSpec, N: int, lam: float,
                      trials: int = 200, test_size: int = 2000, seed: int = 0,
                      resample_reservoir: bool = False,
                      exact_test: bool = False,
                      threads: Optional[int] = None) -> EmpiricalRisk:
    """Monte Carlo estimate of the out-of-sample risk.

    Each trial draws a fresh training set (and fresh map weights iff
    ``resample_reservoir`` and the map is resampleable), fits the ridge
    readout, and scores it either on a fresh finite test set of
    ``test_size`` columns or — with ``exact_test`` — by the closed-form
    conditional risk given the fit (linear maps only).

    Returns mean, standard error (sample std / sqrt(trials)), and the full
    per-trial vector. The per-trial vector is identical at any thread count.
    """
    if trials < 1:
        raise InvalidParam("trials must be >= 1")
    if test_size < 1:
        raise InvalidParam("test_size must be >= 1")
    sigma_u = np.asarray(sigma_u, dtype=float)
    root = matrix_sqrt(sigma_u)
    T = sigma_u.shape[0]

    fixed_spec = None
    if not (resample_reservoir and not map_spec.is_concrete):
        fixed_spec = realize_map(map_spec, child_seed(seed, NS_TRIAL, 0, 1))

    def one_trial(t: int) -> float:
        trial_seed = child_seed(seed, NS_TRIAL, t)
        spec_t = fixed_spec
        if spec_t is None:
            spec_t = realize_map(map_spec, trial_seed)
        g = stream(trial_seed, NS_DATA, 0)
        U = root @ g.standard_normal((T, N))
        E = g.standard_normal((truth.q, N))
        Y = truth.theta.T @ U + truth.sigma_noise * E
        if spec_t.kind == "linear_esn" and spec_t.matrix.shape[0] >= T:
            readout = ridge_fit_input_basis(spec_t.matrix, U, Y, lam)
            input_map = None                      # prediction is u -> readout @ u
        else:
            Z = apply_feature_map(spec_t, U)
            readout = ridge_fit(Z, Y, lam).w_out
            input_map = spec_t
        if exact_test:
            S = None if input_map is None else _map_matrix_for_conditional(input_map)
            return conditional_risk_linear(readout, S, sigma_u, truth)
        gt = stream(trial_seed, NS_TEST, 0)
        U_test = root @ gt.standard_normal((T, test_size))
        Y_test = truth.theta.T @ U_test + truth.sigma_noise * gt.standard_normal(
            (truth.q, test_size))
        if input_map is None:
            pred = readout @ U_test
        else:
            pred = readout @ apply_feature_map(input_map, U_test)
        resid = Y_test - pred
        return float(np.sum(resid ** 2)) / (test_size * truth.q)

    workers = resolve_threads(threads)
    if workers == 1:
        per_trial = np.array([one_trial(t) for t in range(trials)])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = np.array(list(pool.map(one_trial, range(trials))))

    mean = float(per_trial.mean())
    se = float(per_trial.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return EmpiricalRisk(mean=mean, std_error=se, trials=trials,
                         per_trial=per_trial)


def resolvent_mean(map_spec: FeatureMapSpec, sigma_u: np.ndarray, N: int,
                   lam: float, reps: int, seed: int,
                   moments: Optional[PopulationMoments] = None
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """Average the resolvent Q = (Z Z^T / N + lambda I)^-1 over feature draws.

    Returns (mean_Q, mean_QSzQ) where the second moment uses the population
    Sigma_z of the map (closed form for linear maps unless ``moments`` is
    supplied). Used to validate the first- and second-order deterministic
    equivalents at finite size.
    """
    if reps < 10:
        raise InvalidParam("resolvent averaging needs reps >= 10")
    if lam <= 0:
        raise InvalidParam("lambda must be positive")
    sigma_u = np.asarray(sigma_u, dtype=float)
    root = matrix_sqrt(sigma_u)
    T = sigma_u.shape[0]
    spec = realize_map(map_spec, child_seed(seed, NS_REP, 0, 1))
    if moments is None:
        S = _map_matrix_for_conditional(spec)
        moments = moments_linear_map(sigma_u, S)
    sigma_z = moments.sigma_z
    n = spec.n_features
    eye = np.eye(n)
    sum_Q = np.zeros((n, n))
    sum_QSzQ = np.zeros((n, n))
    for r in range(reps):
        g = stream(seed, NS_REP, r)
        U = root @ g.standard_normal((T, N))
        Z = apply_feature_map(spec, U)
        A = Z @ Z.T / N
        A[np.diag_indices_from(A)] += lam
        Q = _solve_spd(A, eye, shift_floor=lam)
        Q = 0.5 * (Q + Q.T)
        sum_Q += Q
        QSz = Q @ sigma_z
        sum_QSzQ += QSz @ Q
    mean_Q = sum_Q / reps
    mean_QSzQ = sum_QSzQ / reps
    return 0.5 * (mean_Q + mean_Q.T), 0.5 * (mean_QSzQ + mean_QSzQ.T)

"""Asymptotic risk of ridge regression on a fixed representation.

In the proportional regime (features n and samples N large at fixed n/N),
the resolvent Q = (Z Z^T / N + lambda I)^-1 of the feature Gram matrix admits
a deterministic equivalent

    Qbar = (Sigma_z / (1 + delta) + lambda I)^-1,

where delta solves the scalar self-consistent equation

    delta = (1/N) Tr(Sigma_z Qbar(delta)).

Writing kappa = lambda (1 + delta) and working in the eigenbasis
{(s_j, v_j)} of Sigma_z, the equation reads

    delta = (1/N) sum_j s_j (1 + delta) / (s_j + kappa),

and the second-order scalar

    alpha = (1/N) sum_j s_j^2 / (s_j + kappa)^2

controls the variance inflation 1/(1 - alpha). The out-of-sample risk of the
ridge readout then decomposes exactly (in the limit) as

    risk = bias^2 + variance + sigma^2,
    variance = sigma^2 alpha / (1 - alpha),

with bias^2 given by three traces over the population moments (see
risk_general) that collapse, for linear maps, to the per-mode weights
kappa^2 / (mu_i + kappa)^2 used by the spectral evaluators.

For a linear echo-state network the feature Gram concentrates around the
T x T limit matrix

    M = Sigma_u^{1/2} diag(phi^(i-T)) Sigma_u^{1/2},

whose eigenpairs feed the same spectral formula. M's spectrum spans
phi^-(T-1), which overflows the absolute accuracy of a plain symmetric
eigensolver long before T = 60 at phi = 0.5; the modes are therefore
computed as squared singular values of Sigma_u^{1/2} diag(phi^((i-T)/2)),
which keeps every mode accurate in the relative sense.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .covariance import GroundTruth, eig_sym, matrix_sqrt
from .errors import AlphaAtOne, InvalidParam, NoConvergence, NumericalFailure
from .moments import PopulationMoments

__all__ = [
    "SelfConsistentSolution",
    "RiskBreakdown",
    "solve_fixed_point",
    "solve_fixed_point_spectral",
    "alpha_from_spectrum",
    "risk_general",
    "risk_esn",
    "risk_ridge",
    "esn_mode_decomposition",
    "optimal_lambda",
    "OptimalLambda",
    "rank_effective",
]

# Picard is cheap but slows down near criticality; after this many sweeps we
# hand the scalar root over to a bracketed solver.
_PICARD_LIMIT = 200

_ALPHA_CEIL = 1.0 - 1e-9


@dataclass(frozen=True)
class SelfConsistentSolution:
    """Solution of the self-consistent resolvent equation.

    Attributes
    ----------
    delta, kappa, alpha : float
        Fixed-point scalar, effective regularization kappa = lam*(1+delta),
        and the variance-inflation scalar (always < 1 on return).
    lam : float
        Ridge parameter the solution was computed at.
    N : int
        Sample count entering the 1/N normalization.
    spectrum : ndarray
        Eigenvalues of Sigma_z (or the mode spectrum mu) actually used.
    basis : ndarray or None
        Eigenvectors of Sigma_z when the matrix route was taken; None for
        the purely spectral route.
    iterations : int
    residual : float
        |delta - h(delta)| / (1 + delta) at return.
    """

    delta: float
    kappa: float
    alpha: float
    lam: float
    N: int
    spectrum: np.ndarray
    basis: Optional[np.ndarray]
    iterations: int
    residual: float


@dataclass(frozen=True)
class RiskBreakdown:
    """Risk decomposition: total = bias_sq + variance + noise."""

    bias_sq: float
    variance: float
    noise: float
    total: float

    @staticmethod
    def assemble(bias_sq: float, variance: float, noise: float) -> "RiskBreakdown":
        return RiskBreakdown(bias_sq=float(bias_sq), variance=float(variance),
                             noise=float(noise),
                             total=float(bias_sq + variance + noise))


def _fixed_point_scalar(s: np.ndarray, lam: float, N: int,
                        tol: float, max_iter: int) -> Tuple[float, int, float]:
    """Solve delta = (1/N) sum s_j / (s_j/(1+delta) + lam) for delta >= 0.

    The map h(delta) is increasing and concave in delta, so g = delta - h
    has a unique nonnegative root, bracketed by [0, sum(s)/(lam N) + 1].
    Plain Picard iteration from 0 converges for most spectra; near the
    interpolation threshold its contraction factor approaches 1, so after
    _PICARD_LIMIT sweeps the root is finished by Brent's method instead.
    """

    def h(d):
        return float(np.sum(s / (s / (1.0 + d) + lam))) / N

    delta = 0.0
    iterations = 0
    budget = min(max_iter, _PICARD_LIMIT)
    prev_diff = None
    converged = False
    for _ in range(budget):
        new = h(delta)
        iterations += 1
        diff = abs(new - delta)
        delta = new
        if diff == 0.0:
            converged = True
            break
        # Successive differences under-report the error when the contraction
        # factor rho is near 1: |delta - delta*| ~ diff * rho / (1 - rho),
        # so stop on the rho-corrected estimate, not on diff itself.
        if prev_diff is not None and diff < prev_diff:
            rho = diff / prev_diff
            if diff * rho / (1.0 - rho) <= tol * (1.0 + delta):
                converged = True
                break
        prev_diff = diff
    if not converged:
        upper = float(np.sum(s)) / (lam * N) + 1.0

        def g(d):
            return d - h(d)

        try:
            delta, info = brentq(g, 0.0, upper, xtol=1e-14, rtol=8.9e-16,
                                 maxiter=300, full_output=True)
        except (ValueError, RuntimeError) as exc:
            raise NoConvergence(
                f"fixed point did not converge (Picard {budget} sweeps, "
                f"Brent failed: {exc})",
                residual=abs(g(delta)) / (1.0 + delta),
            ) from exc
        iterations += info.iterations
    residual = abs(delta - h(delta)) / (1.0 + delta)
    if residual > max(tol, 1e-12) * 10.0:
        raise NoConvergence("fixed-point residual above tolerance at return",
                            residual=residual)
    return delta, iterations, residual


def alpha_from_spectrum(mu: np.ndarray, kappa: float, N: int,
                        numerator: str = "squared") -> float:
    """Variance-inflation scalar from a mode spectrum.

    numerator="squared" (the default used everywhere in this library):
        alpha = (1/N) sum mu_i^2 / (mu_i + kappa)^2,
    which is the form consistent with the matrix definition and with the
    small-lambda limit alpha -> rank/N.

    numerator="linear" computes (1/N) sum mu_i / (mu_i + kappa)^2 instead;
    it exists purely for comparison and is not used by the risk evaluators.
    """
    mu = np.asarray(mu, dtype=float)
    if numerator == "squared":
        return float(np.sum((mu / (mu + kappa)) ** 2)) / N
    if numerator == "linear":
        return float(np.sum(mu / (mu + kappa) ** 2)) / N
    raise InvalidParam(f"unknown alpha numerator {numerator!r}")


def solve_fixed_point_spectral(mu: Sequence[float], lam: float, N: int,
                               tol: float = 1e-12,
                               max_iter: int = 100000) -> SelfConsistentSolution:
    """Solve the self-consistent equation given only the mode spectrum.

    Zero modes contribute nothing, so this agrees with the matrix route on
    diag(mu) padded with any number of zeros.
    """
    if lam <= 0:
        raise InvalidParam("lambda must be positive")
    if N < 1:
        raise InvalidParam("N must be >= 1")
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size and float(mu.min()) < -1e-12 * max(1.0, float(mu.max())):
        raise InvalidParam("mode spectrum must be nonnegative")
    mu = np.clip(mu, 0.0, None)
    if mu.size == 0 or float(mu.max()) == 0.0:
        return SelfConsistentSolution(delta=0.0, kappa=lam, alpha=0.0, lam=lam,
                                      N=N, spectrum=mu, basis=None,
                                      iterations=0, residual=0.0)
    delta, iterations, residual = _fixed_point_scalar(mu, lam, N, tol, max_iter)
    kappa = lam * (1.0 + delta)
    alpha = alpha_from_spectrum(mu, kappa, N)
    if alpha >= _ALPHA_CEIL:
        raise AlphaAtOne(f"alpha = {alpha!r} at lambda = {lam!r}")
    return SelfConsistentSolution(delta=delta, kappa=kappa, alpha=alpha,
                                  lam=lam, N=N, spectrum=mu, basis=None,
                                  iterations=iterations, residual=residual)


def solve_fixed_point(sigma_z: np.ndarray, lam: float, N: int,
                      tol: float = 1e-12,
                      max_iter: int = 100000) -> SelfConsistentSolution:
    """Solve the self-consistent equation for a feature covariance Sigma_z.

    Eigendecomposes Sigma_z once and runs the identical scalar iteration on
    the spectrum (the trace in the fixed point only sees eigenvalues). The
    returned solution keeps the eigenbasis so downstream trace evaluations
    can work in diagonal coordinates.
    """
    sigma_z = np.asarray(sigma_z, dtype=float)
    s, V = eig_sym(sigma_z)
    s = np.clip(s, 0.0, None)
    sol = solve_fixed_point_spectral(s, lam, N, tol=tol, max_iter=max_iter)
    return SelfConsistentSolution(delta=sol.delta, kappa=sol.kappa,
                                  alpha=sol.alpha, lam=lam, N=N, spectrum=s,
                                  basis=V, iterations=sol.iterations,
                                  residual=sol.residual)


def risk_general(moments: PopulationMoments, truth: GroundTruth, lam: float,
                 N: int, tol: float = 1e-12,
                 max_iter: int = 100000) -> RiskBreakdown:
    """Asymptotic risk for an arbitrary linear-moment description.

    Parameters
    ----------
    moments : PopulationMoments
        (Sigma_u, Sigma_z, Sigma_uz) for the feature map.
    truth : GroundTruth
        Teacher matrix Theta* (T x q) and noise level sigma.
    lam : float
        Ridge parameter.
    N : int
        Training sample count.

    Notes
    -----
    With the fixed point solved in the eigenbasis {(s_j, v_j)} of Sigma_z and
    B = Sigma_uz^T Theta*, the bias reads

        bias^2 = [ Tr(Theta*^T Sigma_u Theta*)
                   - 2 sum_j ||(V^T B)_j||^2 / (s_j + kappa)
                   + sum_j s_j ||(V^T B)_j||^2 / (s_j + kappa)^2 ] / (1 - alpha)

    and the variance is sigma^2 alpha / (1 - alpha). Tiny negative bias
    values (above -1e-10 of scale) are rounding and clamp to zero; anything
    more negative means the supplied moments are inconsistent.
    """
    sol = solve_fixed_point(moments.sigma_z, lam, N, tol=tol, max_iter=max_iter)
    theta = truth.theta
    if theta.shape[0] != moments.sigma_u.shape[0]:
        raise InvalidParam("theta rows must match Sigma_u dimension")
    s = sol.spectrum
    V = sol.basis
    B = moments.sigma_uz.T @ theta            # n x q
    Bt = V.T @ B                              # diagonal coordinates
    w = np.sum(Bt ** 2, axis=1)               # per-mode weight, length n
    inv = 1.0 / (s + sol.kappa)
    t0 = float(np.sum(theta * (moments.sigma_u @ theta)))
    t1 = float(np.sum(w * inv))
    t2 = float(np.sum(w * s * inv ** 2))
    # the risk is defined per output coordinate (mean squared error divided
    # by q), while the trace expressions sum over outputs
    bias = (t0 - 2.0 * t1 + t2) / truth.q / (1.0 - sol.alpha)
    scale = max(1.0, abs(t0))
    if bias < 0.0:
        if bias >= -1e-10 * scale:
            bias = 0.0
        else:
            raise NumericalFailure(
                f"bias^2 = {bias:.3e} is negative beyond rounding; "
                "population moments are inconsistent"
            )
    variance = truth.sigma_noise ** 2 * sol.alpha / (1.0 - sol.alpha)
    return RiskBreakdown.assemble(bias, variance, truth.sigma_noise ** 2)


def esn_mode_decomposition(sigma_u: np.ndarray, phi: float, T: int):
    """Eigenpairs (mu_i, v_i) of Sigma_u^{1/2} diag(phi^(i-T)) Sigma_u^{1/2}.

    Computed through the SVD of A = Sigma_u^{1/2} diag(phi^((i-T)/2)):
    mu are the squared singular values and the modes are the left singular
    vectors. A plain symmetric eigensolve of the product matrix loses the
    trailing modes to absolute roundoff once phi^-(T-1) approaches 1/eps;
    the SVD of the half-scaled factor keeps them to relative precision.

    Returns (mu, modes, root) with mu descending and root = Sigma_u^{1/2}.
    """
    if not (0.0 < phi <= 1.0):
        raise InvalidParam("phi must lie in (0, 1]")
    sigma_u = np.asarray(sigma_u, dtype=float)
    if sigma_u.shape != (T, T):
        raise InvalidParam(f"Sigma_u must be {T} x {T}")
    root = matrix_sqrt(sigma_u)
    i = np.arange(1, T + 1, dtype=float)
    A = root * phi ** ((i - T) / 2.0)[None, :]
    modes, sv, _ = np.linalg.svd(A)
    return sv ** 2, modes, root


def _risk_from_modes(mu: np.ndarray, weights: np.ndarray, sigma: float,
                     lam: float, N: int, tol: float,
                     max_iter: int) -> RiskBreakdown:
    """Shared spectral risk core: per-mode bias weights kappa^2/(mu+kappa)^2."""
    sol = solve_fixed_point_spectral(mu, lam, N, tol=tol, max_iter=max_iter)
    shrink = sol.kappa / (mu + sol.kappa)
    bias = float(np.sum(shrink ** 2 * weights)) / (1.0 - sol.alpha)
    variance = sigma ** 2 * sol.alpha / (1.0 - sol.alpha)
    return RiskBreakdown.assemble(bias, variance, sigma ** 2)


def risk_esn(sigma_u: np.ndarray, truth: GroundTruth, phi: float, T: int,
             lam: float, N: int, tol: float = 1e-12,
             max_iter: int = 100000) -> RiskBreakdown:
    """Asymptotic risk of a linear echo-state readout.

    Uses the T x T limit of the reservoir feature Gram, so the reservoir
    size n never appears: in the proportional regime the linear-ESN risk
    depends on the reservoir only through phi. phi = 1 is allowed here as
    the degenerate boundary where the evaluator reduces to plain ridge.
    """
    mu, modes, root = esn_mode_decomposition(sigma_u, phi, T)
    if truth.theta.shape[0] != T:
        raise InvalidParam("theta rows must match T")
    P = truth.theta.T @ (root @ modes)        # q x T
    weights = np.sum(P ** 2, axis=0) / truth.q   # risk is per output coordinate
    return _risk_from_modes(mu, weights, truth.sigma_noise, lam, N, tol, max_iter)


def risk_ridge(sigma_u: np.ndarray, truth: GroundTruth, lam: float, N: int,
               tol: float = 1e-12, max_iter: int = 100000) -> RiskBreakdown:
    """Asymptotic risk of plain ridge regression on the raw inputs.

    The spectral formula with the eigenpairs (m_i, v_i) of Sigma_u itself:
    bias weights are m_i ||Theta*^T v_i||^2 since Sigma_u^{1/2} v_i =
    sqrt(m_i) v_i.
    """
    sigma_u = np.asarray(sigma_u, dtype=float)
    m, V = eig_sym(sigma_u)
    m = np.clip(m, 0.0, None)
    if truth.theta.shape[0] != sigma_u.shape[0]:
        raise InvalidParam("theta rows must match Sigma_u dimension")
    P = truth.theta.T @ V                     # q x T
    weights = m * np.sum(P ** 2, axis=0) / truth.q   # per output coordinate
    return _risk_from_modes(m, weights, truth.sigma_noise, lam, N, tol, max_iter)


@dataclass(frozen=True)
class OptimalLambda:
    """Result of the 1-D regularization search."""

    lambda_star: float
    risk_star: float
    grid_lambda: float
    grid_risk: float
    used_grid_fallback: bool


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def optimal_lambda(risk_of_lambda: Callable[[float], float],
                   search_range: Tuple[float, float] = (1e-6, 1e3),
                   tol: float = 1e-6,
                   grid_points: int = 200) -> OptimalLambda:
    """Minimize total risk over lambda by golden section on log-lambda.

    The search is cross-checked against a log-spaced grid of
    ``grid_points`` evaluations; if the grid finds a strictly better
    minimum (by more than 1e-6 relative — a non-unimodal profile), the
    grid argmin is returned instead and the fallback flag is set. Grid
    ties break toward the smallest lambda.
    """
    lo, hi = search_range
    if not (0.0 < lo < hi):
        raise InvalidParam("search range must satisfy 0 < lo < hi")
    a, b = np.log(lo), np.log(hi)

    def f(x):
        return float(risk_of_lambda(float(np.exp(x))))

    # Golden-section bookkeeping: keep f evaluated at the two interior points.
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > np.log1p(tol):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x_star = c if fc <= fd else d
    gs_lambda = float(np.exp(x_star))
    gs_risk = min(fc, fd)

    grid = np.exp(np.linspace(np.log(lo), np.log(hi), grid_points))
    grid_risks = np.array([risk_of_lambda(float(lv)) for lv in grid])
    k = int(np.argmin(grid_risks))
    grid_lambda, grid_risk = float(grid[k]), float(grid_risks[k])

    if gs_risk > grid_risk + 1e-6 * abs(grid_risk):
        return OptimalLambda(lambda_star=grid_lambda, risk_star=grid_risk,
                             grid_lambda=grid_lambda, grid_risk=grid_risk,
                             used_grid_fallback=True)
    return OptimalLambda(lambda_star=gs_lambda, risk_star=gs_risk,
                         grid_lambda=grid_lambda, grid_risk=grid_risk,
                         used_grid_fallback=False)


def rank_effective(mu: Sequence[float], threshold: float = 1e-12) -> int:
    """Numerical rank of a spectrum: count of mu_i > threshold * mu_max."""
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size == 0:
        return 0
    top = float(mu.max())
    if top <= 0.0:
        return 0
    return int(np.sum(mu > threshold * top))

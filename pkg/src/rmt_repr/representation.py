"""Feature maps: identity, random projection, and echo-state reservoirs.

A reservoir is sampled as W = W0 / (sqrt(phi) * nu) with W0 i.i.d. standard
normal and nu either the exact spectral radius rho(W0) ("exact" mode) or the
asymptotic value sqrt(n) ("asymptotic" mode; rho(W0)/sqrt(n) -> 1 almost
surely). Under either normalization the T x T Gram of the controllability
matrix S = [W^{T-1} w_in, ..., w_in] concentrates around

    E[S^T S] -> diag(phi^(i-T)),  i = 1..T,

the exponential time-weighting that the spectral risk formula consumes. The
exact mode pins rho(W) = phi^(-1/2) to machine precision but carries a
finite-n spectral-edge bias of order sqrt(log n / n) per power of W, so
experiments that compare against the limit use the asymptotic mode.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse.linalg

from .errors import DimMismatch, Diverged, InvalidParam, NumericalFailure
from .rng import NS_RESERVOIR, stream

__all__ = [
    "ReservoirParams",
    "ProjectionParams",
    "FeatureMapSpec",
    "sample_reservoir",
    "spectral_radius",
    "build_controllability_matrix",
    "simulate_reservoir",
    "apply_feature_map",
    "realize_map",
    "identity_map",
    "projection_map",
    "projection_from_params",
    "linear_esn_map",
    "nonlinear_esn_map",
    "esn_map",
]

# Above this order, dense eigvals gets slow; switch to ARPACK.
_DENSE_EIG_MAX = 600

_ACTIVATIONS = {
    "identity": lambda x: x,
    "tanh": np.tanh,
}


@dataclass(frozen=True)
class ReservoirParams:
    """Sampling parameters for a reservoir of size n over T time steps."""

    n: int
    T: int
    phi: float
    activation: str = "identity"
    normalization: str = "exact"   # "exact" (rho(W0)) or "asymptotic" (sqrt(n))

    def validate(self) -> list:
        problems = []
        if self.n < 1:
            problems.append("n must be >= 1")
        if self.T < 1:
            problems.append("T must be >= 1")
        if not (0.0 < self.phi < 1.0):
            problems.append("phi must lie in (0, 1)")
        if self.activation not in _ACTIVATIONS:
            problems.append(f"unknown activation {self.activation!r}")
        if self.normalization not in ("exact", "asymptotic"):
            problems.append("normalization must be 'exact' or 'asymptotic'")
        return problems


@dataclass(frozen=True)
class ProjectionParams:
    """Sampling parameters for a random projection (entries N(0, variance)).

    variance defaults to 1/T so feature norms stay of unit order.
    """

    n: int
    T: int
    variance: Optional[float] = None

    def validate(self) -> list:
        problems = []
        if self.n < 1 or self.T < 1:
            problems.append("projection dims must be >= 1")
        if self.variance is not None and self.variance <= 0:
            problems.append("projection variance must be positive")
        return problems


@dataclass(frozen=True)
class FeatureMapSpec:
    """Tagged description of a feature map z = F(u).

    kind is one of "identity", "random_projection", "linear_esn",
    "nonlinear_esn". A spec is either *concrete* (weights stored in
    matrix / W, w_in) or *deferred* (only sampling parameters stored, weights
    drawn later by realize_map — this is what lets Monte Carlo drivers
    resample the map per trial). Use the module-level constructors rather
    than building instances by hand.
    """

    kind: str
    n_features: int
    T: int
    matrix: Optional[np.ndarray] = None        # projection W_proj or ESN S
    W: Optional[np.ndarray] = None             # nonlinear ESN recurrent weights
    w_in: Optional[np.ndarray] = None          # nonlinear ESN input weights
    activation: Optional[str] = None
    reservoir: Optional[ReservoirParams] = None
    projection: Optional[ProjectionParams] = None

    @property
    def is_concrete(self) -> bool:
        if self.kind == "identity":
            return True
        if self.kind in ("random_projection", "linear_esn"):
            return self.matrix is not None
        return self.W is not None


def identity_map(T: int) -> FeatureMapSpec:
    return FeatureMapSpec(kind="identity", n_features=T, T=T)


def projection_map(W_proj: np.ndarray) -> FeatureMapSpec:
    W_proj = np.asarray(W_proj, dtype=float)
    n, T = W_proj.shape
    return FeatureMapSpec(kind="random_projection", n_features=n, T=T, matrix=W_proj)


def linear_esn_map(S: np.ndarray) -> FeatureMapSpec:
    S = np.asarray(S, dtype=float)
    n, T = S.shape
    return FeatureMapSpec(kind="linear_esn", n_features=n, T=T, matrix=S)


def nonlinear_esn_map(W: np.ndarray, w_in: np.ndarray, activation: str = "tanh") -> FeatureMapSpec:
    W = np.asarray(W, dtype=float)
    w_in = np.asarray(w_in, dtype=float).ravel()
    if W.shape[0] != W.shape[1] or W.shape[0] != w_in.shape[0]:
        raise DimMismatch("W must be n x n and w_in length n")
    if activation not in _ACTIVATIONS:
        raise InvalidParam(f"unknown activation {activation!r}")
    # T is supplied at application time via U's row count for this kind.
    return FeatureMapSpec(kind="nonlinear_esn", n_features=W.shape[0], T=-1,
                          W=W, w_in=w_in, activation=activation)


def projection_from_params(params: ProjectionParams) -> FeatureMapSpec:
    """Deferred random projection; weights drawn by realize_map."""
    problems = params.validate()
    if problems:
        raise InvalidParam("; ".join(problems))
    return FeatureMapSpec(kind="random_projection", n_features=params.n,
                          T=params.T, projection=params)


def esn_map(params: ReservoirParams) -> FeatureMapSpec:
    """Deferred echo-state map; weights drawn by realize_map.

    The identity activation yields the linear-ESN kind (closed-form S);
    anything else runs the recurrence at application time.
    """
    problems = params.validate()
    if problems:
        raise InvalidParam("; ".join(problems))
    kind = "linear_esn" if params.activation == "identity" else "nonlinear_esn"
    return FeatureMapSpec(kind=kind, n_features=params.n, T=params.T,
                          activation=params.activation, reservoir=params)


def realize_map(spec: FeatureMapSpec, seed: int) -> FeatureMapSpec:
    """Sample the weights of a deferred map; concrete specs pass through.

    Deterministic given (spec, seed): reservoirs stream from
    (seed, NS_RESERVOIR, 0) inside sample_reservoir, projections from
    (seed, NS_RESERVOIR, 1).
    """
    if spec.is_concrete:
        return spec
    if spec.reservoir is not None:
        params = spec.reservoir
        W, w_in = sample_reservoir(params, seed)
        if spec.kind == "linear_esn":
            S = build_controllability_matrix(W, w_in, params.T)
            return FeatureMapSpec(kind="linear_esn", n_features=params.n,
                                  T=params.T, matrix=S, reservoir=params)
        return FeatureMapSpec(kind="nonlinear_esn", n_features=params.n,
                              T=params.T, W=W, w_in=w_in,
                              activation=params.activation, reservoir=params)
    if spec.projection is not None:
        p = spec.projection
        var = 1.0 / p.T if p.variance is None else p.variance
        g = stream(seed, NS_RESERVOIR, 1)
        W_proj = g.standard_normal((p.n, p.T)) * np.sqrt(var)
        return FeatureMapSpec(kind="random_projection", n_features=p.n,
                              T=p.T, matrix=W_proj, projection=p)
    raise InvalidParam("deferred map spec carries no sampling parameters")


def spectral_radius(W: np.ndarray) -> float:
    """Largest eigenvalue modulus of a (generally nonsymmetric) matrix.

    Dense eigvals up to order 600; ARPACK largest-modulus above that, with a
    dense fallback if the Arnoldi iteration stalls. Power iteration is not an
    option here: Gaussian matrices have complex spectra.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimMismatch("spectral_radius expects a square matrix")
    if not np.all(np.isfinite(W)):
        raise InvalidParam("matrix entries must be finite")
    n = W.shape[0]
    if n <= _DENSE_EIG_MAX:
        try:
            return float(np.max(np.abs(np.linalg.eigvals(W))))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"dense eigensolver failed: {exc}") from exc
    try:
        vals = scipy.sparse.linalg.eigs(
            W, k=min(6, n - 2), which="LM", return_eigenvectors=False,
            maxiter=50 * n, tol=1e-9,
        )
        return float(np.max(np.abs(vals)))
    except (scipy.sparse.linalg.ArpackNoConvergence, scipy.sparse.linalg.ArpackError):
        try:
            return float(np.max(np.abs(np.linalg.eigvals(W))))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"eigensolvers failed at n={n}: {exc}") from exc


def sample_reservoir(params: ReservoirParams, seed: int):
    """Draw reservoir weights (W, w_in) for the given parameters.

    W0 has i.i.d. standard normal entries and is rescaled by
    1 / (sqrt(phi) * nu); w_in has i.i.d. normal entries of variance 1/n.
    Deterministic given (params, seed).
    """
    problems = params.validate()
    if problems:
        raise InvalidParam("; ".join(problems))
    g = stream(seed, NS_RESERVOIR, 0)
    n = params.n
    W0 = g.standard_normal((n, n))
    if params.normalization == "exact":
        nu = spectral_radius(W0)
        if nu == 0.0:
            raise NumericalFailure("sampled reservoir has zero spectral radius")
    else:
        nu = np.sqrt(n)
    W = W0 / (np.sqrt(params.phi) * nu)
    w_in = g.standard_normal(n) / np.sqrt(n)
    return W, w_in


def build_controllability_matrix(W: np.ndarray, w_in: np.ndarray, T: int) -> np.ndarray:
    """S = [W^{T-1} w_in, ..., W w_in, w_in], built right-to-left.

    Column j (1-based) is W^(T-j) w_in; cost is T-1 mat-vecs, O(T n^2).
    """
    W = np.asarray(W, dtype=float)
    w_in = np.asarray(w_in, dtype=float).ravel()
    if W.shape[0] != W.shape[1] or W.shape[0] != w_in.shape[0]:
        raise DimMismatch("W must be n x n and w_in length n")
    if T < 1:
        raise InvalidParam("T must be >= 1")
    n = W.shape[0]
    S = np.empty((n, T))
    v = w_in.copy()
    S[:, T - 1] = v
    for j in range(T - 2, -1, -1):
        v = W @ v
        S[:, j] = v
    return S


def _resolve_activation(activation: Union[str, Callable, None]):
    if activation is None:
        return _ACTIVATIONS["identity"]
    if callable(activation):
        return activation
    try:
        return _ACTIVATIONS[activation]
    except KeyError:
        raise InvalidParam(f"unknown activation {activation!r}") from None


def simulate_reservoir(W: np.ndarray, w_in: np.ndarray, u: np.ndarray,
                       activation: Union[str, Callable, None] = "identity") -> np.ndarray:
    """Run the reservoir recurrence x(t) = f(u(t) w_in + W x(t-1)) from x(0)=0.

    Returns the final state x(T). With the identity activation this equals
    S u for S from build_controllability_matrix.
    """
    W = np.asarray(W, dtype=float)
    w_in = np.asarray(w_in, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if W.shape[0] != W.shape[1] or W.shape[0] != w_in.shape[0]:
        raise DimMismatch("W must be n x n and w_in length n")
    f = _resolve_activation(activation)
    x = np.zeros(W.shape[0])
    for t in range(u.shape[0]):
        x = f(u[t] * w_in + W @ x)
        if not np.all(np.isfinite(x)):
            raise Diverged(f"reservoir state non-finite at step {t + 1}")
    return x


def apply_feature_map(spec: FeatureMapSpec, U: np.ndarray) -> np.ndarray:
    """Apply the map column-wise: Z[:, i] = F(U[:, i]).

    U is T x N; the result is n_features x N.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2:
        raise DimMismatch("U must be T x N")
    T = U.shape[0]
    if spec.kind == "identity":
        if spec.n_features != T:
            raise DimMismatch("identity map requires n_features == T")
        return U.copy()
    if spec.kind in ("random_projection", "linear_esn"):
        if spec.matrix.shape[1] != T:
            raise DimMismatch(
                f"map expects {spec.matrix.shape[1]} input rows, got {T}"
            )
        return spec.matrix @ U
    if spec.kind == "nonlinear_esn":
        f = _resolve_activation(spec.activation)
        X = np.zeros((spec.n_features, U.shape[1]))
        for t in range(T):
            X = f(np.outer(spec.w_in, U[t, :]) + spec.W @ X)
            if not np.all(np.isfinite(X)):
                raise Diverged(f"reservoir batch state non-finite at step {t + 1}")
        return X
    raise InvalidParam(f"unknown feature map kind {spec.kind!r}")

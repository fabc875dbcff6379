"""Population covariances, their square roots, and ground-truth parameters.

Builds the input covariance Sigma_u used throughout the theory and the
simulation engine, plus the teacher matrix Theta* of the noisy linear model
y = Theta*^T u + eps.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InvalidCovariance, InvalidParam, NotPSD, NotSymmetric

__all__ = [
    "CovarianceSpec",
    "GroundTruth",
    "build_covariance",
    "matrix_sqrt",
    "generate_theta",
    "eig_sym",
]

# Relative symmetry / PSD tolerances used by every consumer of these matrices.
SYM_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(frozen=True)
class CovarianceSpec:
    """Declarative description of a T x T input covariance.

    kind is one of "identity", "ar1", "diagonal", "explicit".
    ar1 uses entries decay**|i-j|; diagonal takes a vector of nonnegative
    values; explicit takes the matrix itself.
    """

    kind: str
    dim_T: int
    decay: Optional[float] = None            # ar1 only
    values: Optional[np.ndarray] = None      # diagonal only
    matrix: Optional[np.ndarray] = None      # explicit only

    def validate(self) -> list:
        """Return a list of problems (empty when well-formed)."""
        problems = []
        if self.dim_T < 1:
            problems.append("dim_T must be >= 1")
        if self.kind == "identity":
            pass
        elif self.kind == "ar1":
            if self.decay is None or not (0.0 < self.decay < 1.0):
                problems.append("ar1 decay must lie in (0, 1)")
        elif self.kind == "diagonal":
            if self.values is None or len(self.values) != self.dim_T:
                problems.append("diagonal values must have length dim_T")
            elif np.any(np.asarray(self.values) < 0):
                problems.append("diagonal values must be nonnegative")
        elif self.kind == "explicit":
            if self.matrix is None:
                problems.append("explicit spec requires a matrix")
            elif np.asarray(self.matrix).shape != (self.dim_T, self.dim_T):
                problems.append("explicit matrix must be T x T")
        else:
            problems.append(f"unknown covariance kind {self.kind!r}")
        return problems


@dataclass(frozen=True)
class GroundTruth:
    """Teacher parameters of the noisy linear model.

    theta is T x q; sigma_noise is the noise standard deviation (sigma, not
    sigma squared).
    """

    theta: np.ndarray
    sigma_noise: float
    q: int = field(default=1)

    def __post_init__(self):
        th = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if th.shape[1] != self.q and th.shape[0] == self.q:
            # Accept a (q, T) layout mistake only when unambiguous.
            th = th.T
        object.__setattr__(self, "theta", th)
        if not np.all(np.isfinite(th)):
            raise InvalidParam("theta must be finite")
        if self.sigma_noise < 0:
            raise InvalidParam("sigma_noise must be >= 0")
        if th.shape[1] != self.q:
            raise InvalidParam(
                f"theta has {th.shape[1]} columns, expected q={self.q}"
            )


def build_covariance(spec: CovarianceSpec) -> np.ndarray:
    """Realize a CovarianceSpec as a symmetric PSD T x T matrix."""
    problems = spec.validate()
    if problems:
        raise InvalidCovariance("; ".join(problems))
    T = spec.dim_T
    if spec.kind == "identity":
        return np.eye(T)
    if spec.kind == "ar1":
        idx = np.arange(T)
        return spec.decay ** np.abs(idx[:, None] - idx[None, :])
    if spec.kind == "diagonal":
        return np.diag(np.asarray(spec.values, dtype=float))
    # explicit
    M = np.asarray(spec.matrix, dtype=float)
    if not np.allclose(M, M.T, atol=SYM_TOL * max(1.0, np.abs(M).max())):
        raise InvalidCovariance("explicit matrix is not symmetric within 1e-10")
    M = 0.5 * (M + M.T)
    w = np.linalg.eigvalsh(M)
    if w[0] < -PSD_TOL * max(1.0, w[-1]):
        raise InvalidCovariance(f"explicit matrix has eigenvalue {w[0]:.3e} < 0")
    return M


def _check_symmetric(M: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetric("expected a square matrix")
    scale = max(1.0, float(np.abs(M).max()))
    if not np.allclose(M, M.T, atol=tol * scale):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    return 0.5 * (M + M.T)


def matrix_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-8 * ||M||, 0) are treated as rounding noise and
    clamped to 0; anything more negative raises NotPSD.
    """
    M = _check_symmetric(M)
    w, V = np.linalg.eigh(M)
    scale = max(1.0, float(np.abs(w).max()))
    if w[0] < -PSD_TOL * scale:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below -1e-8 * ||M||")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)


def generate_theta(kind: str, T: int, q: int = 1, scale: float = 1.0,
                   rho: Optional[float] = None,
                   matrix: Optional[np.ndarray] = None,
                   seed: Optional[int] = None) -> np.ndarray:
    """Build a T x q teacher matrix.

    kind:
      "decay"     -- column vector (rho^1, ..., rho^T) * scale; requires q=1
                     and rho in (0, 1].
      "unit_rows" -- q columns drawn standard normal then normalized to unit
                     Euclidean norm, times scale; requires a seed.
      "explicit"  -- pass-through of ``matrix``.
    """
    if kind == "decay":
        if q != 1:
            raise InvalidParam("decay teacher is a single column (q=1)")
        if rho is None or not (0.0 < rho <= 1.0):
            raise InvalidParam("decay rho must lie in (0, 1]")
        t = np.arange(1, T + 1, dtype=float)
        return (rho ** t * scale).reshape(T, 1)
    if kind == "unit_rows":
        if seed is None:
            raise InvalidParam("unit_rows teacher needs a seed")
        from .rng import NS_DATA, stream
        g = stream(seed, NS_DATA, 0)
        th = g.standard_normal((T, q))
        th /= np.linalg.norm(th, axis=0, keepdims=True)
        return th * scale
    if kind == "explicit":
        if matrix is None:
            raise InvalidParam("explicit teacher requires a matrix")
        th = np.asarray(matrix, dtype=float).reshape(T, q)
        return th * scale
    raise InvalidParam(f"unknown teacher kind {kind!r}")


def eig_sym(M: np.ndarray):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns (mu, V) with M @ V = V @ diag(mu) and V orthonormal. Eigenvector
    columns are only determined up to sign (and rotation inside degenerate
    eigenspaces); tests should assert reconstruction, not specific vectors.
    """
    M = _check_symmetric(M)
    w, V = np.linalg.eigh(M)
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]

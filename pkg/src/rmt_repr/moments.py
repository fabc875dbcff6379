"""Population second moments (Sigma_z, Sigma_uz) of a feature map.

Closed form for linear maps; Monte Carlo over Gaussian inputs otherwise.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import matrix_sqrt
from .errors import DimMismatch, InvalidParam
from .representation import FeatureMapSpec, apply_feature_map
from .rng import NS_BLOCK, stream

__all__ = ["PopulationMoments", "moments_linear_map", "moments_monte_carlo"]

_MC_BLOCK = 4096  # samples per RNG block; fixed so results are block-count invariant


@dataclass(frozen=True)
class PopulationMoments:
    """The triple (Sigma_u, Sigma_z, Sigma_uz) the risk formulas consume.

    Conventions: Sigma_z = E[z z^T] (n x n), Sigma_uz = E[u z^T] (T x n),
    plain second moments without mean-centering. provenance records how the
    moments were obtained.
    """

    sigma_u: np.ndarray
    sigma_z: np.ndarray
    sigma_uz: np.ndarray
    provenance: str = "closed_form"
    mc_samples: Optional[int] = None
    mc_seed: Optional[int] = None

    def __post_init__(self):
        T = self.sigma_u.shape[0]
        n = self.sigma_z.shape[0]
        if self.sigma_u.shape != (T, T) or self.sigma_z.shape != (n, n):
            raise DimMismatch("covariance blocks must be square")
        if self.sigma_uz.shape != (T, n):
            raise DimMismatch(
                f"sigma_uz must be {T} x {n}, got {self.sigma_uz.shape}"
            )


def moments_linear_map(sigma_u: np.ndarray, S: Optional[np.ndarray] = None) -> PopulationMoments:
    """Exact moments for a linear map z = S u (S = None means identity).

    Sigma_z = S Sigma_u S^T and Sigma_uz = Sigma_u S^T, exactly.
    """
    sigma_u = np.asarray(sigma_u, dtype=float)
    if S is None:
        return PopulationMoments(sigma_u=sigma_u, sigma_z=sigma_u.copy(),
                                 sigma_uz=sigma_u.copy())
    S = np.asarray(S, dtype=float)
    if S.shape[1] != sigma_u.shape[0]:
        raise DimMismatch("S columns must match Sigma_u dimension")
    SigS = sigma_u @ S.T                      # T x n
    sigma_z = S @ SigS
    sigma_z = 0.5 * (sigma_z + sigma_z.T)
    return PopulationMoments(sigma_u=sigma_u, sigma_z=sigma_z, sigma_uz=SigS)


def moments_monte_carlo(spec: FeatureMapSpec, sigma_u: np.ndarray,
                        samples: int, seed: int) -> PopulationMoments:
    """Empirical second moments over fresh draws u ~ N(0, Sigma_u).

    Samples are taken in fixed-size blocks with per-block RNG streams and the
    partial sums are reduced in block order, so the result is independent of
    any parallel scheduling of the blocks.
    """
    if samples < 1000:
        raise InvalidParam("moment estimation needs samples >= 1000")
    sigma_u = np.asarray(sigma_u, dtype=float)
    T = sigma_u.shape[0]
    root = matrix_sqrt(sigma_u)
    n = spec.n_features
    sum_zz = np.zeros((n, n))
    sum_uz = np.zeros((T, n))
    n_blocks = (samples + _MC_BLOCK - 1) // _MC_BLOCK
    done = 0
    for b in range(n_blocks):
        m = min(_MC_BLOCK, samples - done)
        g = stream(seed, NS_BLOCK, b)
        U = root @ g.standard_normal((T, m))
        Z = apply_feature_map(spec, U)
        sum_zz += Z @ Z.T
        sum_uz += U @ Z.T
        done += m
    sigma_z = sum_zz / samples
    sigma_z = 0.5 * (sigma_z + sigma_z.T)
    # Clamp eigen-noise the same way covariance construction does.
    w, V = np.linalg.eigh(sigma_z)
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        sigma_z = (V * w) @ V.T
        sigma_z = 0.5 * (sigma_z + sigma_z.T)
    return PopulationMoments(sigma_u=sigma_u, sigma_z=sigma_z,
                             sigma_uz=sum_uz / samples,
                             provenance="monte_carlo",
                             mc_samples=samples, mc_seed=seed)

"""Exact asymptotic risk of ridge regression on random representations.

The library answers one question in closed form: when a ridge readout is
trained on features ``z = S u`` of Gaussian inputs, what is its test risk in
the proportional regime where the feature dimension and the sample count grow
together?  The answer is driven by a scalar fixed point (``delta``, or
equivalently the effective penalty ``kappa``) that depends only on the
population feature spectrum; everything else — bias, variance, the location
of the interpolation peak, the optimal penalty — follows from it.

Three layers:

- core theory (:mod:`.rmt_core`, :mod:`.moments`): fixed-point solvers and
  closed-form risk for identity features, arbitrary linear maps, and linear
  echo-state networks (where the spectrum has an explicit memory-mode form);
- simulation (:mod:`.empirical`): a seeded Monte Carlo engine that measures
  the same risks on finite samples, including conditional (infinite-test)
  risk evaluation and numerically safe readout fits;
- experiments (:mod:`.experiments`, :mod:`.plotting`, :mod:`.cli`): sweeps,
  phase diagrams, and validation studies comparing the two, exposed through
  the ``rmt-repr`` command-line tool.
"""

from .covariance import (CovarianceSpec, GroundTruth, build_covariance,
                         eig_sym, generate_theta, matrix_sqrt)
from .empirical import (EmpiricalRisk, conditional_risk_linear,
                        empirical_risk_mc, resolvent_mean, ridge_fit,
                        ridge_fit_input_basis, sample_dataset)
from .errors import (AlphaAtOne, ConfigError, DimMismatch, Diverged,
                     InvalidCovariance, InvalidParam, NoConvergence,
                     NotPSD, NotSymmetric, NumericalFailure, RmtError)
from .experiments import (ConvergenceStudy, GramStudy, GridResult, GridPoint,
                          LambdaStudy, PhaseCell, PhaseResult,
                          ResolventErrorStudy, ScenarioConfig, SweepSpec,
                          convergence_study, default_double_descent_spec,
                          double_descent_sweep, gram_concentration_study,
                          optimal_lambda_study, phase_diagram,
                          resolvent_error_study, run_sweep)
from .moments import PopulationMoments, moments_linear_map, moments_monte_carlo
from .representation import (FeatureMapSpec, ProjectionParams,
                             ReservoirParams, apply_feature_map,
                             build_controllability_matrix, esn_map,
                             identity_map, linear_esn_map, projection_map,
                             realize_map, sample_reservoir, spectral_radius)
from .rmt_core import (OptimalLambda, RiskBreakdown, SelfConsistentSolution,
                       alpha_from_spectrum, esn_mode_decomposition,
                       optimal_lambda, rank_effective, risk_esn,
                       risk_general, risk_ridge, solve_fixed_point,
                       solve_fixed_point_spectral)
from .rng import child_seed, resolve_threads, stream

__version__ = "0.1.0"

__all__ = [
    "AlphaAtOne", "ConfigError", "ConvergenceStudy", "CovarianceSpec",
    "DimMismatch", "Diverged", "EmpiricalRisk", "FeatureMapSpec",
    "GramStudy", "GridPoint", "GridResult",
    "GroundTruth", "InvalidCovariance", "InvalidParam", "LambdaStudy",
    "NoConvergence", "NotPSD", "NotSymmetric", "NumericalFailure",
    "OptimalLambda", "PhaseCell", "PhaseResult", "PopulationMoments",
    "ProjectionParams", "ReservoirParams", "ResolventErrorStudy",
    "RiskBreakdown", "RmtError", "ScenarioConfig", "SelfConsistentSolution",
    "SweepSpec",
    "alpha_from_spectrum", "apply_feature_map",
    "build_controllability_matrix", "build_covariance", "child_seed",
    "conditional_risk_linear", "convergence_study",
    "default_double_descent_spec", "double_descent_sweep", "eig_sym",
    "empirical_risk_mc", "esn_map", "esn_mode_decomposition",
    "generate_theta", "gram_concentration_study", "identity_map",
    "linear_esn_map", "matrix_sqrt", "moments_linear_map",
    "moments_monte_carlo", "optimal_lambda", "optimal_lambda_study",
    "phase_diagram", "projection_map", "rank_effective", "realize_map",
    "resolve_threads", "resolvent_error_study", "resolvent_mean",
    "ridge_fit", "ridge_fit_input_basis", "risk_esn", "risk_general",
    "risk_ridge", "run_sweep", "sample_dataset", "sample_reservoir",
    "solve_fixed_point", "solve_fixed_point_spectral", "spectral_radius",
    "stream", "__version__",
]

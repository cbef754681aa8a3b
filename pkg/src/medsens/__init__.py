"""Mediation analysis with binary exposure, mediator and outcome.

Probit models for each equation, natural direct/indirect effect
estimation with delta-method intervals, and sensitivity analysis to
unmeasured confounding via fixed correlations between the latent error
terms of the exposure, mediator and outcome equations.
"""

from .biprobit import (ConfoundingKind, ConstrainedFit, LikelihoodTerms,
                       constrained_grad, constrained_loglik, fit_constrained,
                       likelihood_terms, loglik_exposure_mediator,
                       loglik_exposure_outcome, loglik_mediator_outcome)
from .datamodel import (ColumnRoles, CovariateProfile, Dataset, LoadResult,
                        ModelSpec, build_exposure_design,
                        build_mediator_design, build_outcome_design,
                        covariate_stats, exposure_design, exposure_terms,
                        load_csv, mediator_design, mediator_terms,
                        outcome_design, outcome_terms, validate_for_fit,
                        write_csv)
from .effects import (EffectEstimate, EffectType, FitContext, GradientVector,
                      conditional_effect, delta_se, effect_marginal,
                      effect_with_ci, grad_conditional, grad_effect_marginal,
                      grad_nde_conditional, grad_nie_conditional,
                      nde_conditional, nde_total_conditional, nie_conditional,
                      nie_pure_conditional, total_effect_conditional)
from .errors import (ConfigError, DataError, MedsensError, NotConvergedError,
                     NumericalError, RankError, ScanError, SeparationError)
from .numkernel import (EvaluationError, binorm_cdf, bvn_cdf, clamp_rho,
                        finite_diff_grad, log_bvn_cdf, norm_cdf, norm_pdf,
                        norm_quantile)
from .probit import (ProbitFit, UnconstrainedFits, fit_probit,
                     fit_unconstrained, probit_loglik)
from .sensitivity import (IntervalResult, RhoGrid, ScanPoint, SensitivityScan,
                          SignClass, SignRanges, identification_set,
                          refine_boundary, run_scan, sign_ranges,
                          uncertainty_interval, unconstrained_context)
from .simgen import (CovariateSpec, LatentDraws, TrueParams, demo_params,
                     replicate_seeds, simulate, simulate_latent, true_effects)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "MedsensError", "ConfigError", "DataError", "RankError",
    "SeparationError", "NotConvergedError", "NumericalError", "ScanError",
    "EvaluationError",
    # numerics
    "binorm_cdf", "bvn_cdf", "log_bvn_cdf", "norm_cdf", "norm_pdf",
    "norm_quantile", "clamp_rho", "finite_diff_grad",
    # data
    "ColumnRoles", "Dataset", "LoadResult", "load_csv", "write_csv",
    "ModelSpec", "CovariateProfile", "covariate_stats", "validate_for_fit",
    "exposure_design", "mediator_design", "outcome_design",
    "build_exposure_design", "build_mediator_design", "build_outcome_design",
    "exposure_terms", "mediator_terms", "outcome_terms",
    # probit fits
    "ProbitFit", "fit_probit", "probit_loglik", "UnconstrainedFits",
    "fit_unconstrained",
    # constrained likelihoods
    "ConfoundingKind", "LikelihoodTerms", "likelihood_terms",
    "loglik_exposure_mediator", "loglik_mediator_outcome",
    "loglik_exposure_outcome", "constrained_loglik", "constrained_grad",
    "ConstrainedFit", "fit_constrained",
    # effects
    "EffectType", "conditional_effect", "nde_conditional", "nie_conditional",
    "nde_total_conditional", "nie_pure_conditional",
    "total_effect_conditional", "effect_marginal", "GradientVector",
    "grad_conditional", "grad_nde_conditional", "grad_nie_conditional",
    "grad_effect_marginal", "delta_se", "EffectEstimate", "FitContext",
    "effect_with_ci",
    # simulation
    "CovariateSpec", "TrueParams", "LatentDraws", "simulate",
    "simulate_latent", "true_effects", "replicate_seeds", "demo_params",
    # sensitivity
    "RhoGrid", "ScanPoint", "SensitivityScan", "run_scan",
    "unconstrained_context", "IntervalResult", "identification_set",
    "uncertainty_interval", "SignClass", "SignRanges", "sign_ranges",
    "refine_boundary",
]

"""Maximum-likelihood probit fitting by Newton-Raphson.

The log-likelihood sum_i ln Phi(s_i * x_i'b) with s_i = 2r_i - 1 is
globally concave, so undamped Newton from a zero start converges in a
handful of iterations; a step-halving guard keeps early steps honest.
The inverse-Mills ratio is evaluated as exp(log pdf - log cdf), which
stays accurate far into the tail where pdf/cdf would be 0/0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .datamodel import (Dataset, ModelSpec, build_exposure_design,
                        build_mediator_design, build_outcome_design,
                        validate_for_fit)
from .errors import RankError, SeparationError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

# |linear predictor| beyond this while the likelihood still improves is
# treated as (quasi-)separation: the MLE is drifting to infinity.
_SEPARATION_BOUND = 30.0

MAX_ITER = 100
SCORE_TOL = 1e-6
LOGLIK_RTOL = 1e-10


@dataclass(frozen=True)
class ProbitFit:
    """Converged (or explicitly flagged) probit maximum-likelihood fit."""

    coefficients: np.ndarray
    covariance: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    score_norm: float


def _check_design(design: np.ndarray, response: np.ndarray):
    design = np.asarray(design, dtype=float)
    response = np.asarray(response)
    if design.ndim != 2:
        raise ValueError("design must be a 2-d matrix")
    if response.ndim != 1 or response.shape[0] != design.shape[0]:
        raise ValueError(
            f"response length {response.shape} does not match design rows {design.shape}")
    if not np.isin(np.unique(response), (0, 1)).all():
        raise ValueError("response must be binary 0/1")
    return design, response.astype(float)


def probit_loglik(coefficients: np.ndarray, design: np.ndarray,
                  response: np.ndarray) -> float:
    """Probit log-likelihood at a coefficient vector."""
    design, response = _check_design(design, response)
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (design.shape[1],):
        raise ValueError(
            f"coefficient length {coefficients.shape} does not match design "
            f"columns {design.shape[1]}")
    s = 2.0 * response - 1.0
    return float(log_ndtr(s * (design @ coefficients)).sum())


def _score_info(coefficients, design, s):
    """Score vector and observed information of the probit log-likelihood."""
    q = s * (design @ coefficients)
    logphi = -0.5 * q * q - _LOG_SQRT_2PI
    ratio = np.exp(logphi - log_ndtr(q))          # pdf/cdf, tail-stable
    score = design.T @ (s * ratio)
    weight = ratio * (ratio + q)                  # positive for all q
    info = design.T @ (design * weight[:, None])
    return score, info, float(log_ndtr(q).sum())


def fit_probit(design: np.ndarray, response: np.ndarray,
               max_iter: int = MAX_ITER, score_tol: float = SCORE_TOL,
               loglik_rtol: float = LOGLIK_RTOL) -> ProbitFit:
    """Fit a probit model; raises on rank deficiency and separation.

    Convergence requires both a small score (infinity norm below
    score_tol) and a relative log-likelihood change below loglik_rtol.
    """
    design, response = _check_design(design, response)
    n, k = design.shape
    if n <= k:
        raise RankError(f"cannot fit {k} coefficients on {n} rows")
    if np.linalg.matrix_rank(design) < k:
        raise RankError("design matrix is rank deficient")
    if response.min() == response.max():
        raise SeparationError(
            f"response is constant (all {int(response[0])}); "
            "the probit likelihood has no interior maximum")

    s = 2.0 * response - 1.0
    coef = np.zeros(k)
    score, info, loglik = _score_info(coef, design, s)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise RankError("observed information became singular") from None
        # step halving: never accept a likelihood decrease
        scale = 1.0
        accepted = False
        for _ in range(40):
            cand = coef + scale * step
            cand_score, cand_info, cand_loglik = _score_info(cand, design, s)
            if np.isfinite(cand_loglik) and cand_loglik >= loglik:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            # likelihood cannot be improved along the Newton direction at
            # double precision; stop where we are
            converged = np.abs(score).max() < score_tol
            break
        improved = cand_loglik > loglik
        rel_change = abs(cand_loglik - loglik) / (abs(loglik) + 1.0)
        coef, score, info = cand, cand_score, cand_info
        loglik = cand_loglik
        if improved and np.abs(design @ coef).max() > _SEPARATION_BOUND:
            raise SeparationError(
                "fitted linear predictor exceeded +-30 while the likelihood "
                "was still improving; the data are (quasi-)separated")
        if np.abs(score).max() < score_tol and rel_change < loglik_rtol:
            converged = True
            break

    covariance = np.linalg.inv(info)
    covariance = 0.5 * (covariance + covariance.T)
    return ProbitFit(coefficients=coef, covariance=covariance, loglik=loglik,
                     iterations=iterations, converged=converged,
                     score_norm=float(np.abs(score).max()))


@dataclass(frozen=True)
class UnconstrainedFits:
    """The three separate probit fits under no unmeasured confounding."""

    exposure: ProbitFit
    mediator: ProbitFit
    outcome: ProbitFit


def fit_unconstrained(ds: Dataset, spec: ModelSpec) -> UnconstrainedFits:
    """Fit exposure, mediator and outcome probits on one dataset."""
    validate_for_fit(ds, spec)
    return UnconstrainedFits(
        exposure=fit_probit(build_exposure_design(ds, spec), ds.z),
        mediator=fit_probit(build_mediator_design(ds, spec), ds.m),
        outcome=fit_probit(build_outcome_design(ds, spec), ds.y),
    )

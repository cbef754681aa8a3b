"""Constrained bivariate-probit likelihoods for a fixed error correlation.

Each of the three unmeasured-confounding directions pairs two of the
probit models and ties their latent errors with a fixed correlation rho:

    exposure-mediator:  sum_i ln Phi2(w1_i, (2z_i-1) a'x_i; (2m_i-1)(2z_i-1) rho)
    mediator-outcome:   sum_i ln Phi2(w2_i, (2m_i-1) b'c_i; (2y_i-1)(2m_i-1) rho)
    exposure-outcome:   sum_i ln Phi2(w2_i, (2z_i-1) a'x_i; (2y_i-1)(2z_i-1) rho)

with w1_i = (2m_i-1) times the mediator linear predictor and w2_i =
(2y_i-1) times the outcome linear predictor. Every term is the exact
bivariate-probit cell probability of the observed pair, so at rho = 0
each likelihood splits into the two univariate probit likelihoods.

Gradients use d/da ln Phi2(a, b; r) = phi(a) Phi((b - r a)/sqrt(1-r^2))
/ Phi2(a, b; r), evaluated in log space with the package-wide floor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_ndtr

from .datamodel import (Dataset, ModelSpec, build_exposure_design,
                        build_mediator_design, build_outcome_design,
                        validate_for_fit)
from .errors import SeparationError
from .numkernel import RHO_INTERIOR, bvn_cdf, clamp_rho, safe_log
from .probit import fit_probit

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_SEPARATION_BOUND = 30.0

MAX_ITER = 200
SCORE_TOL = 1e-6


class ConfoundingKind(enum.Enum):
    """Which pair of latent error terms is allowed to be correlated."""

    EXPOSURE_MEDIATOR = "zm"
    MEDIATOR_OUTCOME = "my"
    EXPOSURE_OUTCOME = "zy"


@dataclass(frozen=True)
class LikelihoodTerms:
    """Per-observation signed pieces entering one constrained likelihood.

    w1 is the signed mediator-side predictor (2m-1) * (mediator lp), w2
    the signed outcome-side predictor (2y-1) * (outcome lp); rho_star is
    the per-observation signed correlation of the leading Phi2 argument.
    Fields not used by a given kind are None.
    """

    kind: ConfoundingKind
    w1: np.ndarray | None
    w2: np.ndarray | None
    rho_star: np.ndarray


def _check_len(name: str, coef, ncol: int) -> np.ndarray:
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (ncol,):
        raise ValueError(
            f"{name} has length {coef.shape}, design has {ncol} columns")
    return coef


def _check_rho_interior(rho: float) -> float:
    rho = float(rho)
    if not np.isfinite(rho) or abs(rho) > RHO_INTERIOR:
        raise ValueError(
            f"likelihood evaluation needs |rho| <= {RHO_INTERIOR}, got {rho!r}")
    return rho


def likelihood_terms(kind: ConfoundingKind, ds: Dataset, spec: ModelSpec,
                     rho: float, alpha=None, beta=None,
                     theta=None) -> LikelihoodTerms:
    """Signed per-observation likelihood pieces for one confounding kind."""
    rho = _check_rho_interior(rho)
    s_m = 2.0 * ds.m - 1.0
    s_y = 2.0 * ds.y - 1.0
    w1 = w2 = None
    if kind in (ConfoundingKind.EXPOSURE_MEDIATOR, ConfoundingKind.MEDIATOR_OUTCOME):
        design = build_mediator_design(ds, spec)
        beta = _check_len("beta", beta, design.shape[1])
        w1 = s_m * (design @ beta)
    if kind in (ConfoundingKind.MEDIATOR_OUTCOME, ConfoundingKind.EXPOSURE_OUTCOME):
        design = build_outcome_design(ds, spec)
        theta = _check_len("theta", theta, design.shape[1])
        w2 = s_y * (design @ theta)
    rho_star = (s_m if kind is ConfoundingKind.EXPOSURE_MEDIATOR else s_y) * rho
    return LikelihoodTerms(kind=kind, w1=w1, w2=w2, rho_star=rho_star)


def _pair_designs(kind: ConfoundingKind, ds: Dataset, spec: ModelSpec):
    """Designs and responses for (first, second) coefficient arguments.

    The second argument's model carries the w-style signed predictor in
    the likelihood; the two Phi2 arguments commute, so only the sign
    bookkeeping matters.
    """
    dz = build_exposure_design(ds, spec)
    dm = build_mediator_design(ds, spec)
    dy = build_outcome_design(ds, spec)
    if kind is ConfoundingKind.EXPOSURE_MEDIATOR:
        return (dz, ds.z), (dm, ds.m)
    if kind is ConfoundingKind.MEDIATOR_OUTCOME:
        return (dm, ds.m), (dy, ds.y)
    if kind is ConfoundingKind.EXPOSURE_OUTCOME:
        return (dz, ds.z), (dy, ds.y)
    raise ValueError(f"unknown confounding kind {kind!r}")


def _pair_loglik(coef_a, design_a, resp_a, coef_b, design_b, resp_b, rho):
    s_a = 2.0 * np.asarray(resp_a, dtype=float) - 1.0
    s_b = 2.0 * np.asarray(resp_b, dtype=float) - 1.0
    u_a = s_a * (design_a @ coef_a)
    u_b = s_b * (design_b @ coef_b)
    return float(safe_log(bvn_cdf(u_b, u_a, s_a * s_b * rho)).sum())


def _pair_grad(coef_a, design_a, resp_a, coef_b, design_b, resp_b, rho):
    s_a = 2.0 * np.asarray(resp_a, dtype=float) - 1.0
    s_b = 2.0 * np.asarray(resp_b, dtype=float) - 1.0
    u_a = s_a * (design_a @ coef_a)
    u_b = s_b * (design_b @ coef_b)
    r = s_a * s_b * rho
    logp = safe_log(bvn_cdf(u_b, u_a, r))
    denom = np.sqrt(1.0 - r * r)
    log_w_a = (-0.5 * u_a * u_a - _LOG_SQRT_2PI
               + log_ndtr((u_b - r * u_a) / denom) - logp)
    log_w_b = (-0.5 * u_b * u_b - _LOG_SQRT_2PI
               + log_ndtr((u_a - r * u_b) / denom) - logp)
    # the exponent cap keeps pathological floored-probability corners
    # finite; it never binds at plausible parameter values
    w_a = np.exp(np.minimum(log_w_a, 600.0))
    w_b = np.exp(np.minimum(log_w_b, 600.0))
    grad_a = design_a.T @ (w_a * s_a)
    grad_b = design_b.T @ (w_b * s_b)
    return grad_a, grad_b


def loglik_exposure_mediator(alpha, beta, rho, ds: Dataset,
                             spec: ModelSpec) -> float:
    """Joint log-likelihood of (z, m) with corr(exposure, mediator errors) = rho."""
    rho = _check_rho_interior(rho)
    (da, ra), (db, rb) = _pair_designs(ConfoundingKind.EXPOSURE_MEDIATOR, ds, spec)
    alpha = _check_len("alpha", alpha, da.shape[1])
    beta = _check_len("beta", beta, db.shape[1])
    return _pair_loglik(alpha, da, ra, beta, db, rb, rho)


def loglik_mediator_outcome(beta, theta, rho, ds: Dataset,
                            spec: ModelSpec) -> float:
    """Joint log-likelihood of (m, y) with corr(mediator, outcome errors) = rho."""
    rho = _check_rho_interior(rho)
    (da, ra), (db, rb) = _pair_designs(ConfoundingKind.MEDIATOR_OUTCOME, ds, spec)
    beta = _check_len("beta", beta, da.shape[1])
    theta = _check_len("theta", theta, db.shape[1])
    return _pair_loglik(beta, da, ra, theta, db, rb, rho)


def loglik_exposure_outcome(alpha, theta, rho, ds: Dataset,
                            spec: ModelSpec) -> float:
    """Joint log-likelihood of (z, y) with corr(exposure, outcome errors) = rho."""
    rho = _check_rho_interior(rho)
    (da, ra), (db, rb) = _pair_designs(ConfoundingKind.EXPOSURE_OUTCOME, ds, spec)
    alpha = _check_len("alpha", alpha, da.shape[1])
    theta = _check_len("theta", theta, db.shape[1])
    return _pair_loglik(alpha, da, ra, theta, db, rb, rho)


def constrained_loglik(kind: ConfoundingKind, coef_a, coef_b, rho,
                       ds: Dataset, spec: ModelSpec) -> float:
    """Dispatch to the kind's likelihood with (first, second) coefficients."""
    fn = {ConfoundingKind.EXPOSURE_MEDIATOR: loglik_exposure_mediator,
          ConfoundingKind.MEDIATOR_OUTCOME: loglik_mediator_outcome,
          ConfoundingKind.EXPOSURE_OUTCOME: loglik_exposure_outcome}[kind]
    return fn(coef_a, coef_b, rho, ds, spec)


def constrained_grad(kind: ConfoundingKind, coef_a, coef_b, rho,
                     ds: Dataset, spec: ModelSpec):
    """Analytic gradient of constrained_loglik wrt (coef_a, coef_b)."""
    rho = _check_rho_interior(rho)
    (da, ra), (db, rb) = _pair_designs(kind, ds, spec)
    coef_a = _check_len("coef_a", coef_a, da.shape[1])
    coef_b = _check_len("coef_b", coef_b, db.shape[1])
    return _pair_grad(coef_a, da, ra, coef_b, db, rb, rho)


@dataclass(frozen=True)
class ConstrainedFit:
    """Joint ML fit of one model pair at a fixed error correlation."""

    kind: ConfoundingKind
    rho: float
    coefficients_a: np.ndarray
    coefficients_b: np.ndarray
    covariance_a: np.ndarray
    covariance_b: np.ndarray
    covariance_full: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    score_norm: float
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _fd_hessian(grad_fn, x, rel_step=1e-5):
    """Central finite differences of an analytic gradient."""
    k = x.size
    hess = np.empty((k, k))
    for j in range(k):
        h = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += h
        xm = x.copy()
        xm[j] -= h
        hess[:, j] = (grad_fn(xp) - grad_fn(xm)) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def fit_constrained(kind: ConfoundingKind, rho: float, ds: Dataset,
                    spec: ModelSpec, start: np.ndarray | None = None,
                    max_iter: int = MAX_ITER) -> ConstrainedFit:
    """Maximize the kind's constrained likelihood at a fixed rho.

    rho outside the +-0.999 interior band is clamped with a recorded
    warning. The start defaults to the two univariate probit fits; scans
    pass the previous grid point's optimum instead. Covariances come from
    the inverse observed information of the joint fit, read out as the
    two diagonal blocks (the full matrix is also kept).
    """
    validate_for_fit(ds, spec)
    warnings: list[str] = []
    rho_used, clamped = clamp_rho(rho)
    if clamped:
        warnings.append(
            f"rho = {rho!r} clamped to {rho_used!r} for likelihood evaluation")

    (da, ra), (db, rb) = _pair_designs(kind, ds, spec)
    ka, kb = da.shape[1], db.shape[1]
    if start is None:
        x0 = np.concatenate([fit_probit(da, ra).coefficients,
                             fit_probit(db, rb).coefficients])
    else:
        x0 = np.asarray(start, dtype=float)
        if x0.shape != (ka + kb,):
            raise ValueError(
                f"start has length {x0.shape}, expected {ka + kb} "
                f"({ka} + {kb} coefficients)")

    def negloglik_and_grad(x):
        ga, gb = _pair_grad(x[:ka], da, ra, x[ka:], db, rb, rho_used)
        f = _pair_loglik(x[:ka], da, ra, x[ka:], db, rb, rho_used)
        return -f, -np.concatenate([ga, gb])

    def neggrad(x):
        ga, gb = _pair_grad(x[:ka], da, ra, x[ka:], db, rb, rho_used)
        return -np.concatenate([ga, gb])

    res = minimize(negloglik_and_grad, x0, jac=True, method="BFGS",
                   options={"gtol": 1e-7, "maxiter": max_iter})
    x = res.x
    iterations = int(res.nit)
    score_norm = float(np.abs(res.jac).max())

    # Newton polish with a finite-difference Hessian of the analytic
    # gradient whenever BFGS stops short of the score tolerance
    if score_norm >= SCORE_TOL:
        f_cur, g_cur = negloglik_and_grad(x)
        for _ in range(25):
            if np.abs(g_cur).max() < 0.1 * SCORE_TOL:
                break
            hess = _fd_hessian(neggrad, x)
            try:
                step = np.linalg.solve(hess, -g_cur)
            except np.linalg.LinAlgError:
                break
            scale = 1.0
            moved = False
            for _ in range(30):
                cand = x + scale * step
                f_new, g_new = negloglik_and_grad(cand)
                # require progress in f or in the score; a heavily
                # backtracked step can hit f_new == f_cur exactly and
                # must not count as movement
                if np.isfinite(f_new) and f_new <= f_cur and (
                        f_new < f_cur
                        or np.abs(g_new).max() < np.abs(g_cur).max()):
                    x, f_cur, g_cur = cand, f_new, g_new
                    moved = True
                    break
                scale *= 0.5
            if not moved:
                # at the loglik's float-noise floor strict descent can
                # reject a contracting Newton step; fall back to the score
                # itself, which is what convergence is measured by
                cand = x + step
                f_new, g_new = negloglik_and_grad(cand)
                if np.isfinite(f_new) \
                        and np.abs(g_new).max() < 0.5 * np.abs(g_cur).max() \
                        and f_new <= f_cur + 1e-9 * (1.0 + abs(f_cur)):
                    x, f_cur, g_cur = cand, f_new, g_new
                    moved = True
            iterations += 1
            if not moved:
                break
        score_norm = float(np.abs(g_cur).max())

    if np.abs(da @ x[:ka]).max() > _SEPARATION_BOUND or \
            np.abs(db @ x[ka:]).max() > _SEPARATION_BOUND:
        raise SeparationError(
            "constrained fit drove a linear predictor beyond +-30; "
            "one margin is (quasi-)separated")

    loglik = _pair_loglik(x[:ka], da, ra, x[ka:], db, rb, rho_used)
    converged = bool(score_norm < SCORE_TOL and np.isfinite(loglik))

    info = _fd_hessian(neggrad, x)
    try:
        cov_full = np.linalg.inv(info)
        cov_full = 0.5 * (cov_full + cov_full.T)
        np.linalg.cholesky(cov_full)
    except np.linalg.LinAlgError:
        warnings.append("observed information not positive definite at optimum")
        cov_full = np.linalg.pinv(info)
        cov_full = 0.5 * (cov_full + cov_full.T)
        converged = False

    return ConstrainedFit(
        kind=kind, rho=rho_used,
        coefficients_a=x[:ka], coefficients_b=x[ka:],
        covariance_a=cov_full[:ka, :ka], covariance_b=cov_full[ka:, ka:],
        covariance_full=cov_full, loglik=loglik, iterations=iterations,
        converged=converged, score_norm=score_norm,
        warnings=tuple(warnings))

"""Newton-Raphson probit fitting."""

import math

import numpy as np
import pytest

from medsens import (RankError, SeparationError, build_mediator_design,
                     demo_params, fit_probit, fit_unconstrained, norm_quantile,
                     probit_loglik, simulate)


def intercept_only(y):
    return np.ones((len(y), 1)), np.asarray(y)


def test_intercept_only_closed_form():
    # MLE of an intercept-only probit is the normal quantile of the mean
    y = np.array([1, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0])
    design, resp = intercept_only(y)
    fit = fit_probit(design, resp)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(norm_quantile(y.mean()), abs=1e-8)


def test_loglik_at_zero_coefficients():
    y = np.array([1, 0, 1, 1, 0])
    design, resp = intercept_only(y)
    assert probit_loglik(np.zeros(1), design, resp) == pytest.approx(
        5.0 * math.log(0.5), abs=1e-12)


def test_score_is_small_at_reported_optimum(demo_clean, spec):
    design = build_mediator_design(demo_clean, spec)
    fit = fit_probit(design, demo_clean.m)
    assert fit.converged
    assert fit.score_norm < 1e-6


def test_recovers_true_coefficients(spec):
    params = demo_params()
    ds = simulate(params, 20000, 314)
    fit = fit_probit(build_mediator_design(ds, spec), ds.m)
    se = np.sqrt(np.diag(fit.covariance))
    assert fit.converged
    # 4 marginal checks at 3.5 sigma on one fixed seed
    assert np.all(np.abs(fit.coefficients - params.beta) < 3.5 * se)


def test_loglik_beats_nearby_points(demo_clean, spec):
    design = build_mediator_design(demo_clean, spec)
    fit = fit_probit(design, demo_clean.m)
    rng = np.random.default_rng(0)
    for _ in range(20):
        perturbed = fit.coefficients + rng.normal(scale=1e-3, size=fit.coefficients.size)
        assert probit_loglik(perturbed, design, demo_clean.m) <= fit.loglik + 1e-12


def test_covariance_symmetric_positive_definite(demo_clean, spec):
    fit = fit_probit(build_mediator_design(demo_clean, spec), demo_clean.m)
    cov = fit.covariance
    assert np.array_equal(cov, cov.T)
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_row_permutation_invariance(demo_clean, spec):
    design = build_mediator_design(demo_clean, spec)
    fit = fit_probit(design, demo_clean.m)
    perm = np.random.default_rng(1).permutation(demo_clean.n)
    fit_perm = fit_probit(design[perm], demo_clean.m[perm])
    assert np.allclose(fit.coefficients, fit_perm.coefficients, atol=1e-9)


def test_constant_response_raises():
    design = np.column_stack([np.ones(30), np.linspace(-1, 1, 30)])
    with pytest.raises(SeparationError, match="constant"):
        fit_probit(design, np.ones(30))


def test_separated_data_raises():
    x = np.linspace(-2, 2, 60)
    y = (x > 0).astype(int)
    design = np.column_stack([np.ones(60), x])
    with pytest.raises(SeparationError, match="separat"):
        fit_probit(design, y)


def test_rank_deficient_design_raises():
    rng = np.random.default_rng(2)
    col = rng.normal(size=50)
    design = np.column_stack([np.ones(50), col, col])
    y = rng.integers(0, 2, 50)
    with pytest.raises(RankError):
        fit_probit(design, y)


def test_more_coefficients_than_rows_raises():
    design = np.eye(3)
    with pytest.raises(RankError):
        fit_probit(design, np.array([0, 1, 0]))


def test_non_binary_response_rejected():
    design = np.ones((10, 1))
    with pytest.raises(ValueError):
        fit_probit(design, np.arange(10))


def test_fit_unconstrained_matches_componentwise(demo_clean, spec):
    fits = fit_unconstrained(demo_clean, spec)
    direct = fit_probit(build_mediator_design(demo_clean, spec), demo_clean.m)
    assert np.array_equal(fits.mediator.coefficients, direct.coefficients)
    assert fits.mediator.loglik == direct.loglik
    assert fits.exposure.converged and fits.outcome.converged

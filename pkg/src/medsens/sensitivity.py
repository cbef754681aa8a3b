"""Sensitivity scans over a fixed grid of error-term correlations.

For each grid value rho the relevant constrained fit is recomputed and
the requested effect re-estimated, using the coefficient sources the
confounding direction dictates:

    exposure-mediator (zm): mediator coefficients from the constrained
        fit, outcome coefficients from the unconstrained outcome probit;
    mediator-outcome (my): both coefficient blocks from the joint
        constrained fit;
    exposure-outcome (zy): outcome coefficients from the constrained
        fit, mediator coefficients from the unconstrained mediator probit.

The scan summaries are the identification set (range of point
estimates), the uncertainty interval (union of the pointwise Wald
intervals, so its coverage is at least the nominal level at every grid
value), and sign ranges classifying each rho against the sign of the
rho-nearest-zero estimate.

Fits are chained outward from the grid point nearest zero, warm-started
from the neighboring optimum; the optional parallel mode runs the two
outward half-chains concurrently (capped by the MEDSENS_THREADS
environment variable) and produces identical results by construction.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .biprobit import ConfoundingKind, ConstrainedFit, fit_constrained
from .datamodel import CovariateProfile, Dataset, ModelSpec, validate_for_fit
from .effects import EffectEstimate, EffectType, FitContext, effect_with_ci
from .errors import MedsensError, ScanError
from .numkernel import RHO_INTERIOR
from .probit import UnconstrainedFits, fit_unconstrained

DEFAULT_GRID_LOWER = -0.95
DEFAULT_GRID_UPPER = 0.95
DEFAULT_GRID_STEP = 0.01

# grid values are rounded here to absorb floating accumulation drift
_GRID_DECIMALS = 12


@dataclass(frozen=True)
class RhoGrid:
    """Ordered, deduplicated correlation grid.

    Values beyond the +-0.999 likelihood band are clamped onto it;
    0 is always included when the range spans it.
    """

    lower: float
    upper: float
    step: float
    points: tuple[float, ...]
    clamped: bool = False

    @classmethod
    def regular(cls, lower: float = DEFAULT_GRID_LOWER,
                upper: float = DEFAULT_GRID_UPPER,
                step: float = DEFAULT_GRID_STEP) -> "RhoGrid":
        lower, upper, step = float(lower), float(upper), float(step)
        if not (math.isfinite(lower) and math.isfinite(upper) and math.isfinite(step)):
            raise ValueError("grid bounds and step must be finite")
        if not -1.0 <= lower <= upper <= 1.0:
            raise ValueError(
                f"grid needs -1 <= lower <= upper <= 1, got [{lower}, {upper}]")
        if step <= 0.0:
            raise ValueError(f"grid step must be positive, got {step!r}")
        count = int(math.floor((upper - lower) / step + 1e-9)) + 1
        raw = [lower + i * step for i in range(count)]
        raw.append(upper)
        if lower <= 0.0 <= upper:
            raw.append(0.0)
        clamped = False
        vals = []
        for v in raw:
            if abs(v) > RHO_INTERIOR:
                v = math.copysign(RHO_INTERIOR, v)
                clamped = True
            vals.append(round(v, _GRID_DECIMALS))
        points = tuple(sorted(set(vals)))
        return cls(lower=lower, upper=upper, step=step, points=points,
                   clamped=clamped)


@dataclass(frozen=True)
class ScanPoint:
    """One grid value: the refitted effect (None if the fit failed)."""

    rho: float
    estimate: EffectEstimate | None
    converged: bool
    coefficients: np.ndarray | None = None


@dataclass(frozen=True)
class SensitivityScan:
    """Scan results plus enough context to refit at new rho values."""

    kind: ConfoundingKind
    effect_type: EffectType
    scope: str
    grid: RhoGrid
    alpha: float
    points: tuple[ScanPoint, ...]
    warnings: tuple[str, ...]
    dataset: Dataset
    spec: ModelSpec
    profile: CovariateProfile | None
    base: UnconstrainedFits

    @property
    def failures(self) -> tuple[float, ...]:
        return tuple(pt.rho for pt in self.points if not pt.converged)

    def converged_points(self) -> list[ScanPoint]:
        return [pt for pt in self.points if pt.converged and pt.estimate is not None]


def unconstrained_context(ds: Dataset, spec: ModelSpec,
                          base: UnconstrainedFits | None = None) -> FitContext:
    """FitContext built from the three separate probit fits."""
    if base is None:
        base = fit_unconstrained(ds, spec)
    return FitContext(
        beta=base.mediator.coefficients, theta=base.outcome.coefficients,
        sigma_beta=base.mediator.covariance, sigma_theta=base.outcome.covariance,
        spec=spec, dataset=ds,
        beta_converged=base.mediator.converged,
        theta_converged=base.outcome.converged,
        beta_source="mediator probit fit", theta_source="outcome probit fit")


def _context_from(kind: ConfoundingKind, fit: ConstrainedFit,
                  base: UnconstrainedFits, ds: Dataset,
                  spec: ModelSpec) -> FitContext:
    tag = f"constrained fit (kind={kind.value}, rho={fit.rho})"
    if kind is ConfoundingKind.EXPOSURE_MEDIATOR:
        return FitContext(
            beta=fit.coefficients_b, theta=base.outcome.coefficients,
            sigma_beta=fit.covariance_b, sigma_theta=base.outcome.covariance,
            spec=spec, dataset=ds,
            beta_converged=fit.converged, theta_converged=base.outcome.converged,
            beta_source=tag, theta_source="outcome probit fit",
            rho_context=(kind.value, fit.rho))
    if kind is ConfoundingKind.MEDIATOR_OUTCOME:
        return FitContext(
            beta=fit.coefficients_a, theta=fit.coefficients_b,
            sigma_beta=fit.covariance_a, sigma_theta=fit.covariance_b,
            spec=spec, dataset=ds,
            beta_converged=fit.converged, theta_converged=fit.converged,
            beta_source=tag, theta_source=tag,
            rho_context=(kind.value, fit.rho))
    return FitContext(
        beta=base.mediator.coefficients, theta=fit.coefficients_b,
        sigma_beta=base.mediator.covariance, sigma_theta=fit.covariance_b,
        spec=spec, dataset=ds,
        beta_converged=base.mediator.converged, theta_converged=fit.converged,
        beta_source="mediator probit fit", theta_source=tag,
        rho_context=(kind.value, fit.rho))


def _fit_point(kind, rho, ds, spec, start, base, effect_type, scope, alpha,
               profile) -> ScanPoint:
    try:
        fit = fit_constrained(kind, rho, ds, spec, start=start)
        ctx = _context_from(kind, fit, base, ds, spec)
        est = effect_with_ci(effect_type, scope, ctx, alpha=alpha, profile=profile)
    except MedsensError:
        return ScanPoint(rho=rho, estimate=None, converged=False)
    coefs = np.concatenate([fit.coefficients_a, fit.coefficients_b])
    return ScanPoint(rho=rho, estimate=est, converged=fit.converged,
                     coefficients=coefs)


def _run_chain(rhos, kind, ds, spec, start0, base, effect_type, scope, alpha,
               profile) -> list[ScanPoint]:
    out = []
    start = start0
    for rho in rhos:
        pt = _fit_point(kind, rho, ds, spec, start, base, effect_type, scope,
                        alpha, profile)
        out.append(pt)
        if pt.converged and pt.coefficients is not None:
            start = pt.coefficients
    return out


def _thread_cap() -> int:
    raw = os.environ.get("MEDSENS_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 2


def run_scan(kind: ConfoundingKind, effect_type: EffectType, scope: str,
             grid: RhoGrid, ds: Dataset, spec: ModelSpec,
             alpha: float = 0.05, profile=None,
             parallel: bool = False) -> SensitivityScan:
    """Refit at every grid value and re-estimate one effect.

    Raises ScanError when more than half the grid points fail; partial
    failures are recorded on the scan and surfaced via .failures.
    """
    if scope == "conditional" and profile is None:
        raise ValueError("conditional scope requires a covariate profile")
    if scope not in ("conditional", "marginal"):
        raise ValueError(f"scope must be 'conditional' or 'marginal', got {scope!r}")
    validate_for_fit(ds, spec)
    warnings: list[str] = []
    if grid.clamped:
        warnings.append("grid values beyond |rho| = 0.999 were clamped onto it")
    if max(abs(p) for p in grid.points) > 0.95:
        warnings.append(
            "grid extends beyond |rho| = 0.95; fits near the boundary can be "
            "numerically delicate")

    base = fit_unconstrained(ds, spec)

    points = list(grid.points)
    anchor_idx = int(np.argmin(np.abs(points)))
    anchor = points[anchor_idx]

    anchor_pt = _fit_point(kind, anchor, ds, spec, None, base, effect_type,
                           scope, alpha, profile)
    start0 = anchor_pt.coefficients  # None if the anchor fit failed

    chain_up = points[anchor_idx + 1:]
    chain_down = points[:anchor_idx][::-1]
    use_parallel = bool(parallel and _thread_cap() >= 2 and chain_up and chain_down)
    args = (kind, ds, spec, start0, base, effect_type, scope, alpha, profile)
    if use_parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fut_up = pool.submit(_run_chain, chain_up, *args)
            fut_down = pool.submit(_run_chain, chain_down, *args)
            up, down = fut_up.result(), fut_down.result()
    else:
        up = _run_chain(chain_up, *args)
        down = _run_chain(chain_down, *args)

    merged = sorted([*down, anchor_pt, *up], key=lambda pt: pt.rho)
    n_failed = sum(1 for pt in merged if not pt.converged)
    if n_failed > 0.5 * len(merged):
        failed = [pt.rho for pt in merged if not pt.converged]
        err = ScanError(
            f"{n_failed} of {len(merged)} grid points failed to converge "
            f"(at rho = {failed}); scan abandoned")
        err.failures = tuple(failed)
        raise err
    if n_failed:
        warnings.append(
            f"{n_failed} grid points did not converge: "
            f"{[pt.rho for pt in merged if not pt.converged]}")

    return SensitivityScan(kind=kind, effect_type=effect_type, scope=scope,
                           grid=grid, alpha=alpha, points=tuple(merged),
                           warnings=tuple(warnings), dataset=ds, spec=spec,
                           profile=profile if scope == "conditional" else None,
                           base=base)


@dataclass(frozen=True)
class IntervalResult:
    """A scan summary interval (identification set or uncertainty
    interval)."""

    label: str
    lower: float
    upper: float
    effect_type: EffectType
    kind: ConfoundingKind
    alpha: float | None = None


def _require_converged(scan: SensitivityScan) -> list[ScanPoint]:
    pts = scan.converged_points()
    if not pts:
        raise ScanError("scan has no converged grid points to summarize")
    return pts


def identification_set(scan: SensitivityScan) -> IntervalResult:
    """Range of the point estimates over the converged grid values."""
    ests = [pt.estimate.estimate for pt in _require_converged(scan)]
    return IntervalResult(label="identification_set", lower=min(ests),
                          upper=max(ests), effect_type=scan.effect_type,
                          kind=scan.kind)


def uncertainty_interval(scan: SensitivityScan) -> IntervalResult:
    """Union of the pointwise Wald intervals over the converged grid.

    Covers the true effect with probability at least 1 - alpha whenever
    the true correlation lies on the grid.
    """
    pts = _require_converged(scan)
    return IntervalResult(label="uncertainty_interval",
                          lower=min(pt.estimate.ci_lower for pt in pts),
                          upper=max(pt.estimate.ci_upper for pt in pts),
                          effect_type=scan.effect_type, kind=scan.kind,
                          alpha=scan.alpha)


class SignClass(enum.Enum):
    SIGNIFICANT_SAME_SIGN = "significant_same_sign"
    NOT_SIGNIFICANT = "not_significant"
    REVERSED = "reversed"


@dataclass(frozen=True)
class SignRanges:
    """Partition of the scanned correlation span by significance class.

    ranges are contiguous (lo, hi, class) triples over the converged
    span; each internal boundary sits at the first grid point of the
    next class.
    """

    reference_sign: int
    ranges: tuple[tuple[float, float, SignClass], ...]
    warnings: tuple[str, ...] = ()


def _classify(est: EffectEstimate, reference_sign: int) -> SignClass:
    if est.ci_lower <= 0.0 <= est.ci_upper:
        return SignClass.NOT_SIGNIFICANT
    sign = 1 if est.estimate > 0 else -1
    return (SignClass.SIGNIFICANT_SAME_SIGN if sign == reference_sign
            else SignClass.REVERSED)


def _reference_sign(scan: SensitivityScan) -> tuple[int, list[str]]:
    pts = _require_converged(scan)
    ref_pt = min(pts, key=lambda pt: (abs(pt.rho), pt.rho < 0))
    ref = ref_pt.estimate.estimate
    if ref == 0.0:
        return 1, ["reference estimate at the rho nearest zero is exactly "
                   "zero; treating positive as the reference sign"]
    return (1 if ref > 0 else -1), []


def sign_ranges(scan: SensitivityScan) -> SignRanges:
    """Classify every converged grid value against the near-zero sign."""
    pts = _require_converged(scan)
    ref_sign, warnings = _reference_sign(scan)
    classes = [(pt.rho, _classify(pt.estimate, ref_sign)) for pt in pts]
    ranges: list[tuple[float, float, SignClass]] = []
    run_start = classes[0][0]
    run_class = classes[0][1]
    for rho, cls in classes[1:]:
        if cls is not run_class:
            ranges.append((run_start, rho, run_class))
            run_start, run_class = rho, cls
    ranges.append((run_start, classes[-1][0], run_class))
    return SignRanges(reference_sign=ref_sign, ranges=tuple(ranges),
                      warnings=tuple(warnings))


def refine_boundary(scan: SensitivityScan, resolution: float = 0.01) -> list[float]:
    """Bisect each classification change down to the requested width.

    Each boundary between adjacent differently-classified grid points is
    refined by refitting at bracket midpoints until the bracket is no
    wider than resolution; the returned value is the bracket midpoint.
    A failed refit stops refinement of that boundary at the coarse
    bracket (the scan-level warning machinery does not apply here; the
    coarse midpoint is still returned).
    """
    resolution = float(resolution)
    if resolution <= 0.0:
        raise ValueError(f"resolution must be positive, got {resolution!r}")
    pts = _require_converged(scan)
    ref_sign, _ = _reference_sign(scan)
    boundaries: list[float] = []
    for left, right in zip(pts[:-1], pts[1:]):
        cls_left = _classify(left.estimate, ref_sign)
        cls_right = _classify(right.estimate, ref_sign)
        if cls_left is cls_right:
            continue
        lo, hi = left.rho, right.rho
        start = left.coefficients
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            pt = _fit_point(scan.kind, mid, scan.dataset, scan.spec, start,
                            scan.base, scan.effect_type, scan.scope,
                            scan.alpha, scan.profile)
            if not pt.converged or pt.estimate is None:
                break
            start = pt.coefficients
            if _classify(pt.estimate, ref_sign) is cls_left:
                lo = mid
            else:
                hi = mid
        boundaries.append(0.5 * (lo + hi))
    return sorted(boundaries)

import numpy as np
import pytest

from medsens import (ConfoundingKind, Dataset, ModelSpec, TrueParams,
                     demo_params, simulate)


def reduced_spec() -> ModelSpec:
    """Demo model layout: covariate main effects and the z:m interaction
    only."""
    return ModelSpec(mediator_zx=False, outcome_zx=False, outcome_mx=False,
                     outcome_zmx=False)


def confounded_params(kind: ConfoundingKind, rho: float) -> TrueParams:
    base = demo_params()
    return TrueParams(spec=base.spec, covariates=base.covariates,
                      alpha=base.alpha, beta=base.beta, theta=base.theta,
                      confounding=(kind, rho))


def make_dataset(z, m, y, x=None, names=()):
    z = np.asarray(z)
    if x is None:
        x = np.empty((len(z), 0))
    return Dataset(z=z, m=np.asarray(m), y=np.asarray(y),
                   x=np.asarray(x, dtype=float), covariate_names=tuple(names))


@pytest.fixture(scope="session")
def demo_clean():
    """n=1500 draw from the demo scenario without confounding."""
    return simulate(demo_params(), 1500, 91)


@pytest.fixture(scope="session")
def demo_confounded():
    """n=1500 draw with mediator-outcome confounding at rho=0.3."""
    params = confounded_params(ConfoundingKind.MEDIATOR_OUTCOME, 0.3)
    return simulate(params, 1500, 92)


@pytest.fixture(scope="session")
def spec():
    return reduced_spec()

"""Shared fixtures; the expensive spectral objects are session scoped."""

import numpy as np
import pytest

from conespec.asymptotics import fit_expansion, predict_terms, zeta_continue
from conespec.coneop import discretize, laplace_type, oracle_spectral_data
from conespec.traces import (WeightOperator, heat_trace,
                             weighted_spectral_data)

HEAT_T_MIN = 9e-4
HEAT_T0 = 0.1


@pytest.fixture(scope="session")
def laplace_sd():
    """Exact spectrum of the a=1.5 model, complete below 1.2e5."""
    op = laplace_type(1.5, mode_cap=348)
    return oracle_spectral_data(op, 1.2e5)


@pytest.fixture(scope="session")
def heat_series(laplace_sd):
    ts = np.geomspace(HEAT_T_MIN, 1.2 * HEAT_T0, 140)
    return heat_trace(laplace_sd, ts)


@pytest.fixture(scope="session")
def heat_fit(heat_series):
    terms = predict_terms(2.0, 0.0, 0.0, 2, 4, kind="heat")
    return fit_expansion(heat_series, terms, window=(HEAT_T_MIN, 1.05 * HEAT_T0))


@pytest.fixture(scope="session")
def zeta_cont(heat_series, heat_fit):
    return zeta_continue(heat_series, heat_fit, t0=HEAT_T0)


@pytest.fixture(scope="session")
def beta_weight():
    return WeightOperator(beta=1.0, mu_prime=0.0)


@pytest.fixture(scope="session")
def wsd_beta(beta_weight):
    """Eigenpairs with x^(-1) phi matrix elements; the heavy fixture."""
    op = laplace_type(1.5, mode_cap=162)
    disc = discretize(op, -10.0, 800)
    return weighted_spectral_data(disc, beta_weight, 26000.0)

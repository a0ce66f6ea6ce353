import numpy as np
import pytest

from discsteer import (GalerkinSystem, TargetParams, compute_zeros,
                       gauss_legendre_rule)


@pytest.fixture(scope="session")
def table():
    # orders 0..3, 64 zeros each: covers every consumer in the suite
    return compute_zeros(3, 64)


@pytest.fixture(scope="session")
def table500():
    return compute_zeros(0, 500)


@pytest.fixture(scope="session")
def rule():
    return gauss_legendre_rule(256)


@pytest.fixture(scope="session")
def sys40(table):
    return GalerkinSystem.build(40, table)


@pytest.fixture(scope="session")
def params():
    return TargetParams(0.25, 0.25)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

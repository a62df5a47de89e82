import numpy as np
import pytest

from mclt.distributions import SolitonParams


@pytest.fixture(scope="session")
def params1000():
    return SolitonParams(1000, 0.1, 0.1)


@pytest.fixture(scope="session")
def params100():
    return SolitonParams(100, 0.1, 0.1)


@pytest.fixture(scope="session")
def params30():
    return SolitonParams(30, 0.1, 0.1)


@pytest.fixture()
def np_rng():
    return np.random.default_rng(20240817)

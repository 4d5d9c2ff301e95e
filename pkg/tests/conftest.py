import numpy as np
import pytest

from nevlab.quadrature import QuadratureConfig


@pytest.fixture(scope="session")
def quad():
    return QuadratureConfig()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)

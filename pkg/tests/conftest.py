import numpy as np
import pytest

from difftorus import spectral


@pytest.fixture(autouse=True, scope="session")
def strict_hermitian_checks():
    spectral.set_strict_checks(True)
    yield
    spectral.set_strict_checks(False)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240817))

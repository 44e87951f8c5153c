import numpy as np
import pytest

from dqbaker.propagator import build_baker, spectral_decomposition
from dqbaker.torus import DensityMatrix, TorusSpace

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def space100():
    return TorusSpace(100)


@pytest.fixture(scope="session")
def baker100(space100):
    return build_baker(space100)


@pytest.fixture(scope="session")
def spectrum100(baker100):
    return spectral_decomposition(baker100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(space, rng, rank=None, basis="position"):
    rank = rank or space.N
    X = rng.normal(size=(space.N, rank)) + 1j * rng.normal(size=(space.N, rank))
    rho = X @ X.conj().T
    return DensityMatrix(rho / np.trace(rho).real, basis, space)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

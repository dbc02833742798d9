import numpy as np
import pytest

from phasebeam.hamiltonian import HamiltonianModel
from phasebeam.polynomial import Polynomial

LADDER = [1 / 25, 1 / 50, 1 / 100, 1 / 200, 1 / 400]

# quartic benchmark used by the rate suites
QUARTIC = {
    "n": 1,
    "potential": [{"exponents": [4], "coeff": 0.25}],
    "S_in": [{"exponents": [1], "coeff": 0.3}, {"exponents": [2], "coeff": -0.2},
             {"exponents": [3], "coeff": 0.05}],
    "A_in": {"kind": "gaussian", "a": 2.0, "center": 0.0},
    "beta": 1.0,
    "eps": LADDER,
    "times": [0.5, 1.0],
}

_summary = []


@pytest.fixture(scope="session")
def verdict_log():
    """Collects one line per acceptance criterion for the terminal summary."""
    return _summary


def pytest_terminal_summary(terminalreporter):
    if _summary:
        terminalreporter.section("acceptance criteria")
        for line in _summary:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def quartic_model():
    return HamiltonianModel(1, Polynomial.univariate([0, 0, 0, 0, 0.25]))


@pytest.fixture(scope="session")
def harmonic_model():
    return HamiltonianModel(1, Polynomial.univariate([0, 0, 0.5]))


@pytest.fixture(scope="session")
def free_model():
    return HamiltonianModel(1, Polynomial.zero(1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

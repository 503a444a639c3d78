"""Pytest fixtures for the qdcavity test suite."""

import os
import sys

import pytest

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qdcavity.shared.params import SystemParams, load_preset  # noqa: E402
from qdcavity.shared.precision import Precision  # noqa: E402
from qdcavity.shared.recurrence import solve_steady_state  # noqa: E402


@pytest.fixture(scope="session")
def set_a():
    """Moderate-coupling preset at p = 1e11 s^-1."""
    return load_preset("setA")


@pytest.fixture(scope="session")
def set_b():
    """Strong-coupling preset at p = 1e11 s^-1."""
    return load_preset("setB")


@pytest.fixture(scope="session")
def unit_params():
    """g = kappa = gamma = p = 1, delta = 0."""
    return SystemParams(g=1.0, kappa=1.0, gamma=1.0, p=1.0)


@pytest.fixture(scope="session")
def vacuum_params():
    """Unpumped emitter."""
    return SystemParams(g=1.0, kappa=1.0, gamma=1.0, p=0.0)


@pytest.fixture(scope="session")
def ladder_a(set_a):
    """Set A ladder to order 40 at 128 bits or more."""
    return solve_steady_state(set_a, 40, precision=Precision(128))


@pytest.fixture(scope="session")
def ladder_b(set_b):
    """Set B ladder to order 40 at 128 bits or more."""
    return solve_steady_state(set_b, 40, precision=Precision(128))


@pytest.fixture
def kappa_units():
    """Build a parameter set in units of kappa."""

    def build(g=1.0, gamma=1.0, p=1.0, delta=0.0, gamma_d=0.0):
        return SystemParams(g=g, kappa=1.0, gamma=gamma, p=p, delta=delta, gamma_d=gamma_d)

    return build

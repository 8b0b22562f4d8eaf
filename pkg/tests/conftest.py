"""Shared fixtures for the rectification test suite."""

import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from rectification.field_model import make_bichromatic
from rectification.potential_model import Harmonic, Quartic
from rectification.quantum_engine import GridSpec


@pytest.fixture
def bichromatic():
    """Factory for an (n, m) field with a given relative phase n phi_m - m phi_n."""

    def build(n=1, m=2, eps=(0.5, 0.5), delta_phi=0.0, phi_n=0.0, omega=1.0):
        phi_m = (delta_phi + m * phi_n) / n
        return make_bichromatic(n, m, eps[0], eps[1], phi_n, phi_m, omega)

    return build


@pytest.fixture
def harmonic():
    return Harmonic(omega0=1.0, mass=1.0)


@pytest.fixture
def quartic():
    return Quartic(a=1.0, b=1.0)


@pytest.fixture
def grid():
    return GridSpec(-20.0, 20.0, 512)


import numpy as np
import pytest
from hypothesis import settings

from frontrack.boundary import Boundary, make_boundary
from frontrack.piecewise import Polyline
from frontrack.systems import get_system

settings.register_profile("frontrack", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("frontrack")


@pytest.fixture(scope="session")
def psys():
    return get_system("psystem")


@pytest.fixture(scope="session")
def burgers():
    return get_system("burgers")


@pytest.fixture(scope="session")
def advection():
    return get_system("advection")


@pytest.fixture(scope="session")
def invariant_boundary(psys):
    return make_boundary(psys, "riemann-invariant", 1, Polyline.constant(0.0), margin_c=0.1)


@pytest.fixture(scope="session")
def flux_boundary(psys):
    return make_boundary(psys, "component", 1, Polyline.constant(0.0), margin_c=0.1, component=1)

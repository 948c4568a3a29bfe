import math

import pytest

from dissipext import catalog
from dissipext.analytic import AnalyticFunction, Term, exponential
from dissipext.grid import GridFunction, make_grid


@pytest.fixture(scope="session")
def interval_grid():
    return make_grid("interval", 512)


@pytest.fixture(scope="session")
def halfline_grid():
    return make_grid("halfline", 512)


@pytest.fixture(scope="session")
def phi_x2_minus_x():
    return AnalyticFunction((Term(1.0, 2.0), Term(-1.0, 1.0)))


@pytest.fixture(scope="session")
def phi_ix_exp():
    # i x e^{-x}: the deviation generator of the half-line worked example
    return AnalyticFunction((Term(1j, 1.0, -1.0),))


@pytest.fixture(scope="session")
def rank_one_direction(halfline_grid):
    return GridFunction.from_analytic(halfline_grid, exponential(math.sqrt(2.0), -1.0))


@pytest.fixture(scope="session")
def shirley_instance(phi_x2_minus_x):
    return catalog.build_shirley(math.sqrt(3.0), 0.5 + 0.375j, phi_x2_minus_x)

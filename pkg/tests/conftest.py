import math

import numpy as np
import pytest

from hnhardy.calculus import radial_poly_bump
from hnhardy.grid import Box, GridFunction
from hnhardy.group import KoranyiBall
from hnhardy.orlicz import builtin_phi


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def small_box():
    return Box.cube(4.0, 1)


@pytest.fixture(scope="session")
def gaussian_grid(small_box):
    return GridFunction.from_callable(
        lambda p: np.exp(-2.0 * (p ** 2).sum(axis=-1)), small_box, 24)


@pytest.fixture(scope="session")
def unit_atom():
    """A (power-2, inf, 1)-atom centered at e with anisotropic d=2 moments."""
    phi = builtin_phi("power", 2.0)
    ball = KoranyiBall((0.0, 0.0, 0.0), 1.0)
    bump = radial_poly_bump(1, 1.0, 6)
    from hnhardy.atoms import make_atom

    return make_atom(
        lambda p: bump(p) * (1.0 + 0.6 * p[..., 2] + 0.5 * (p[..., 0] ** 2 - p[..., 1] ** 2)),
        ball, phi, math.inf, 1, cells_across=24)


@pytest.fixture(scope="session")
def standard_atom():
    """A (power-2/3, inf, 4)-atom on an off-center ball."""
    phi = builtin_phi("power", 2.0 / 3.0)
    ball = KoranyiBall((0.3, -0.2, 0.4), 1.0)
    bump = radial_poly_bump(1, 2.0, 6)
    from hnhardy.atoms import make_atom

    return make_atom(
        lambda p: bump(p - np.array([0.3, -0.2, 0.4])) + 0.3 * p[..., 0],
        ball, phi, math.inf, 4, cells_across=24)

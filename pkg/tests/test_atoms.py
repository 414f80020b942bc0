import math

import numpy as np
import pytest

from hnhardy.atoms import (
    Atom,
    critical_moment_order,
    infinity_atom_as,
    make_atom,
    moment_gram,
    validate_atom,
)
from hnhardy.calculus import monomial_basis, monomial_values, radial_poly_bump
from hnhardy.grid import Box, GridFunction
from hnhardy.group import KoranyiBall, ball_volume, dilate
from hnhardy.orlicz import builtin_phi, indicator_norm


@pytest.mark.parametrize("p,expected", [(1.0, 4), (0.5, 8), (2.0 / 3.0, 4), (2.0, 0), (0.25, 16)])
def test_critical_moment_order(p, expected):
    # m_Phi = Q(floor(1/i - 1) + 1) with Q = 4
    assert critical_moment_order(builtin_phi("power", p), 1) == expected


def test_critical_moment_order_other_families():
    assert critical_moment_order(builtin_phi("sum", 0.5, 2.0), 1) == 8
    assert critical_moment_order(builtin_phi("tlog"), 1) == 4


def test_zero_atom_validates():
    phi = builtin_phi("power", 1.0)
    ball = KoranyiBall((0.0, 0.0, 0.0), 1.0)
    from hnhardy.atoms import grid_for_ball

    box, res = grid_for_ball(ball, 20)
    atom = Atom(GridFunction.zeros(box, res), ball, phi, math.inf, 4)
    assert validate_atom(atom)["pass"]


def test_indicator_fails_moments():
    phi = builtin_phi("power", 1.0)
    ball = KoranyiBall((0.0, 0.0, 0.0), 1.0)
    from hnhardy.atoms import grid_for_ball

    box, res = grid_for_ball(ball, 20)
    g = GridFunction.zeros(box, res)
    inside = ball.contains(g.points())
    g.values = inside / indicator_norm(ball.volume(), phi)
    atom = Atom(g, ball, phi, math.inf, 0)
    rep = validate_atom(atom)
    assert not rep["moments"]["pass"]
    assert rep["support"]["pass"]


def test_make_atom_mean_removal_m0():
    phi = builtin_phi("power", 2.0)  # m_Phi = 0
    ball = KoranyiBall((0.2, 0.1, -0.3), 0.8)
    bump = radial_poly_bump(1, 2.0, 5)
    atom = make_atom(lambda p: bump(p - np.array([0.2, 0.1, -0.3])) + 1.0,
                     ball, phi, math.inf, 0, cells_across=20)
    g = atom.samples
    total = float(g.values.sum() * g.cell_volume)
    assert abs(total) <= 1e-12 * np.abs(g.values).max() * ball.volume()


def test_make_atom_odd_symmetry_moments():
    # odd-in-x1 bump: moments against even monomials vanish by symmetry
    phi = builtin_phi("power", 1.0)
    ball = KoranyiBall((0.0, 0.0, 0.0), 1.0)
    bump = radial_poly_bump(1, 1.0, 6)
    atom = make_atom(lambda p: p[..., 0] * bump(p), ball, phi, math.inf, 4,
                     cells_across=24)
    g = atom.samples
    pts = g.flat_points()
    vals = g.values.reshape(-1)
    for I in [(0, 0, 0), (0, 2, 0), (0, 0, 1), (2, 0, 0)]:
        mom = float((vals * monomial_values(pts, I)).sum() * g.cell_volume)
        assert abs(mom) <= 1e-12 * np.abs(vals).max() * ball.volume()


@pytest.mark.parametrize("m", [0, 1, 2, 4])
def test_make_atom_validates_up_to_m4(m, standard_atom):
    phi = builtin_phi("power", 2.0)  # m_Phi = 0 so any m is admissible
    ball = KoranyiBall((0.3, -0.2, 0.4), 1.0)
    bump = radial_poly_bump(1, 2.0, 6)
    atom = make_atom(lambda p: bump(p - np.array([0.3, -0.2, 0.4])) + 0.3 * p[..., 0],
                     ball, phi, math.inf, m, cells_across=24)
    rep = validate_atom(atom)
    assert rep["pass"], rep["moments"]["worst_relative"]
    assert rep["moments"]["worst_relative"] <= 1e-10


def test_make_atom_m_below_critical_rejected():
    phi = builtin_phi("power", 0.5)  # m_Phi = 8
    ball = KoranyiBall((0.0, 0.0, 0.0), 1.0)
    bump = radial_poly_bump(1, 1.0, 6)
    with pytest.raises(ValueError):
        make_atom(lambda p: bump(p), ball, phi, math.inf, 4)


def test_make_atom_degenerate_bump_rejected():
    phi = builtin_phi("power", 2.0)
    ball = KoranyiBall((0.0, 0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        # constant lies in the m = 0 monomial span
        make_atom(lambda p: np.ones(p.shape[:-1]), ball, phi, math.inf, 0)
    with pytest.raises(ValueError):
        make_atom(lambda p: np.zeros(p.shape[:-1]), ball, phi, math.inf, 0)


def test_size_bound_met_with_equality(standard_atom):
    rep = validate_atom(standard_atom)
    assert rep["size"]["pass"]
    assert rep["size"]["value"] == pytest.approx(rep["size"]["bound"], rel=1e-12)


def test_infinity_atom_is_p0_atom(standard_atom):
    # every (Phi, inf, m)-atom is a (Phi, p0, m)-atom for 1 < p0 < inf
    for p0 in (1.5, 2.0, 6.0):
        rep = validate_atom(infinity_atom_as(standard_atom, p0))
        assert rep["pass"]
    with pytest.raises(ValueError):
        infinity_atom_as(standard_atom, 1.0)


def test_finite_p0_construction():
    phi = builtin_phi("power", 1.0)
    ball = KoranyiBall((0.0, 0.0, 0.0), 1.0)
    bump = radial_poly_bump(1, 1.0, 6)
    atom = make_atom(lambda p: bump(p) * (1 + 0.4 * p[..., 1]), ball, phi, 2.0, 4,
                     cells_across=24)
    rep = validate_atom(atom)
    assert rep["pass"]
    assert atom.samples.lp_norm(2.0) == pytest.approx(atom.size_bound(), rel=1e-10)


def test_scaling_consistency(unit_atom):
    # dilating profile and ball together preserves support and moments
    # exactly; the size bound rescales through ||chi_{lam B}||_Phi
    lam = 2.0
    src = unit_atom.samples
    ball2 = KoranyiBall(tuple(dilate(lam, np.asarray(unit_atom.ball.center))),
                        lam * unit_atom.ball.radius)
    from hnhardy.atoms import grid_for_ball

    chi_ratio = indicator_norm(ball_volume(lam, 1), unit_atom.phi) / \
        indicator_norm(ball_volume(1.0, 1), unit_atom.phi)
    box, res = grid_for_ball(ball2, 24)

    def dilated_profile(p):
        vals = src.interp(dilate(1.0 / lam, p), mode="constant") / chi_ratio
        return np.where(ball2.contains(p), vals, 0.0)

    g2 = GridFunction.from_callable(dilated_profile, box, res)
    atom2 = Atom(g2, ball2, unit_atom.phi, math.inf, unit_atom.m)
    rep = validate_atom(atom2, moment_tol=2e-2, size_tol=5e-2, support_tol=1e-9)
    assert rep["support"]["pass"]
    assert rep["moments"]["pass"]  # interpolated samples: grid-limited slack
    assert rep["size"]["pass"]
    bound_ratio = atom2.size_bound() / unit_atom.size_bound()
    assert bound_ratio == pytest.approx(1.0 / chi_ratio, rel=1e-12)


def test_moment_gram_spd():
    ball = KoranyiBall((0.3, -0.2, 0.4), 1.0)
    G = moment_gram(ball, 4, cells_across=24)
    eig = np.linalg.eigvalsh(G)
    assert eig.min() > 0.0
    assert G.shape == (len(monomial_basis(4, 1)),) * 2


def test_validate_under_resolved_ball():
    phi = builtin_phi("power", 1.0)
    ball = KoranyiBall((0.0, 0.0, 0.0), 0.05)
    g = GridFunction.zeros(Box.cube(1.0, 1), 8)
    atom = Atom(g, ball, phi, math.inf, 0)
    with pytest.raises(ValueError):
        validate_atom(atom)
    # explicit relaxation accepts grid-limited balls
    assert validate_atom(atom, min_cells_across=0)["pass"]

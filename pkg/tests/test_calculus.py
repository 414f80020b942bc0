import math

import numpy as np
import pytest
import sympy as sp

from hnhardy.calculus import (
    Polynomial,
    SmoothField,
    apply_multiindex,
    apply_multiindex_field,
    coordinate_symbols,
    dilated_field,
    fundamental_kernel_field,
    gaussian_like,
    homogeneous_degree,
    index_length,
    left_translate,
    monomial_basis,
    monomial_matrix,
    monomial_values,
    radial_poly_bump,
    schwartz_seminorm,
    sublaplacian,
    sublaplacian_field,
    vector_field,
    xfield,
)
from hnhardy.grid import Box
from hnhardy.group import dilate, multiply


def sympy_xi(i, expr, n=1):
    """Independent symbolic oracle for the left-invariant fields."""
    syms = coordinate_symbols(n)
    t = syms[-1]
    if i <= n:
        return sp.diff(expr, syms[i - 1]) + 2 * syms[i + n - 1] * sp.diff(expr, t)
    if i <= 2 * n:
        return sp.diff(expr, syms[i - 1]) - 2 * syms[i - n - 1] * sp.diff(expr, t)
    return sp.diff(expr, t)


def test_homogeneous_degree_and_length():
    assert homogeneous_degree((1, 2, 3)) == 9
    assert homogeneous_degree((0, 0, 1)) == 2  # the t-slot counts twice
    assert index_length((1, 2, 3)) == 6


def test_monomial_basis_k1_and_k0():
    assert monomial_basis(0, 1) == [(0, 0, 0)]
    # d <= 1 excludes t
    assert set(monomial_basis(1, 1)) == {(0, 0, 0), (1, 0, 0), (0, 1, 0)}
    # enumeration oracle for k = 4
    brute = [(a, b, c) for a in range(5) for b in range(5) for c in range(3)
             if a + b + 2 * c <= 4]
    assert sorted(monomial_basis(4, 1)) == sorted(brute)


def test_monomial_dilation_homogeneity():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(32, 3))
    for I in [(2, 0, 0), (1, 1, 1), (0, 0, 2)]:
        lhs = monomial_values(dilate(1.7, pts), I)
        rhs = 1.7 ** homogeneous_degree(I) * monomial_values(pts, I)
        assert np.allclose(lhs, rhs)


def test_vector_field_linear_coordinate():
    syms = coordinate_symbols(1)
    f = SmoothField.from_sympy(syms[0], 1)
    assert vector_field(1, f, np.array([0.2, 0.4, 0.1])) == pytest.approx(1.0)


def test_vector_field_t_coordinate_hand_oracle():
    # X1 t = 2 x2, so 10 at x = (3, 5)
    syms = coordinate_symbols(1)
    f = SmoothField.from_sympy(syms[2], 1)
    assert vector_field(1, f, np.array([3.0, 5.0, 0.0])) == pytest.approx(10.0)
    assert vector_field(3, f, np.array([3.0, 5.0, 0.0])) == pytest.approx(1.0)


def test_vector_field_index_range():
    f = gaussian_like(1)
    with pytest.raises(ValueError):
        vector_field(4, f, np.zeros(3))


@pytest.mark.parametrize("i", [1, 2, 3])
def test_finite_differences_match_symbolic(i):
    syms = coordinate_symbols(1)
    expr = sp.exp(-(syms[0] ** 2) - 0.5 * syms[1] ** 2 - syms[2] ** 2) * (1 + syms[0])
    exact = sp.lambdify(syms, sympy_xi(i, expr), "numpy")
    fd = SmoothField.from_callable(
        sp.lambdify(syms, expr, "numpy").__call__ and
        (lambda p, fn=sp.lambdify(syms, expr, "numpy"): fn(p[..., 0], p[..., 1], p[..., 2])),
        1, fd_step=1e-5)
    z = np.array([0.3, -0.2, 0.4])
    got = vector_field(i, fd, z)
    assert got == pytest.approx(exact(*z), rel=1e-7)


def test_fd_exact_on_low_degree_polynomials():
    # central differences are exact (up to rounding) for degree <= 2
    f = SmoothField.from_callable(
        lambda p: 1.0 + 2 * p[..., 0] - p[..., 1] + 0.5 * p[..., 2], 1, fd_step=1e-3)
    z = np.array([0.7, -0.1, 0.2])
    assert vector_field(1, f, z) == pytest.approx(2.0 + 2 * z[1] * 0.5, abs=1e-9)


def test_apply_multiindex_identity_and_order():
    f = gaussian_like(1)
    z = np.array([0.2, 0.3, -0.1])
    assert apply_multiindex((0, 0, 0), f, z) == pytest.approx(float(f(z)))
    assert homogeneous_degree((0, 0, 1)) == 2


def test_apply_multiindex_homogeneity_paper_identity():
    # X^I(f(r.z)) = r^{d(I)} (X^I f)(r.z)
    f = gaussian_like(1, 1.3, 0.9)
    for r in (0.5, 2.0):
        fr = dilated_field(f, r)
        for I in [(1, 0, 0), (1, 1, 0), (0, 0, 1), (2, 0, 1)]:
            z = np.array([0.25, -0.3, 0.15])
            lhs = apply_multiindex(I, fr, z)
            rhs = r ** homogeneous_degree(I) * apply_multiindex(I, f, dilate(r, z))
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_apply_multiindex_fd_guard():
    f = SmoothField.from_callable(lambda p: np.exp(-(p ** 2).sum(axis=-1)), 1)
    with pytest.raises(ValueError):
        apply_multiindex((5, 0, 0), f, np.zeros(3))


def test_left_invariance():
    f = gaussian_like(1)
    w = np.array([0.4, -0.3, 0.6])
    z = np.array([0.1, 0.2, -0.3])
    for i in (1, 2, 3):
        lhs = vector_field(i, left_translate(f, w), z)
        rhs = vector_field(i, f, multiply(w, z))
        assert lhs == pytest.approx(rhs, rel=1e-4, abs=1e-8)


def test_sublaplacian_constant_and_x_squared():
    const = SmoothField.from_sympy(sp.Integer(3), 1)
    assert sublaplacian(const, np.array([0.5, 0.1, 0.2])) == pytest.approx(0.0, abs=1e-12)
    syms = coordinate_symbols(1)
    x2 = SmoothField.from_sympy(syms[0] ** 2 + syms[1] ** 2, 1)
    # symbolic oracle: each X_i^2 |x|^2 = 2, so L|x|^2 = -4n
    assert sublaplacian(x2, np.array([0.3, -0.4, 0.9])) == pytest.approx(-4.0)


def test_sublaplacian_kernel_annihilation_exact_and_fd():
    K = fundamental_kernel_field(1)
    pts = np.array([[1.0, 0.4, 0.3], [0.6, 0.0, -0.5], [0.0, 0.8, 0.9]])
    assert np.abs(sublaplacian_field(K)(pts)).max() <= 1e-10
    fd = SmoothField.from_callable(lambda p: K(p), 1, fd_step=1e-3)
    for z in pts:
        assert abs(sublaplacian(fd, z)) <= 1e-3


def test_radial_field_tower_matches_fd():
    b = radial_poly_bump(1, 1.0, 8)
    fd = SmoothField.from_callable(lambda p: b(p), 1, fd_step=1e-5)
    z = np.array([0.3, 0.2, 0.1])
    for i in (1, 2, 3):
        assert xfield(i, b)(z) == pytest.approx(xfield(i, fd)(z), rel=1e-6, abs=1e-8)
    out = np.array([1.5, 0.0, 0.0])
    assert xfield(1, b)(out) == 0.0


def test_schwartz_seminorm_properties():
    box = Box.cube(1.5, 1)
    zero = SmoothField.from_sympy(sp.Integer(0), 1)
    assert schwartz_seminorm(zero, 2, box, 10) == 0.0
    phi = radial_poly_bump(1, 1.0, 8)
    s2 = schwartz_seminorm(phi, 2, box, 14)
    s3 = schwartz_seminorm(phi, 3, box, 14)
    assert s3 >= s2
    # grid-refinement oracle on a Gaussian-type profile: 2x finer within 2%
    gauss = gaussian_like(1, 0.8, 0.8)
    gbox = Box.cube(3.0, 1)
    coarse = schwartz_seminorm(gauss, 2, gbox, 32)
    fine = schwartz_seminorm(gauss, 2, gbox, 64)
    assert abs(fine - coarse) <= 0.02 * fine


def test_p1_vanishing_jet_implies_zero():
    # coefficient system: p(z0) = 0 and X^I p(z0) = 0 for d(I) <= 1 force p = 0
    z0 = np.array([0.7, -0.4, 0.3])
    basis = monomial_basis(1, 1)
    rows = [monomial_matrix(z0[None, :], 1, 1)[0]]
    for i in (1, 2):
        row = []
        for I in basis:
            poly = Polynomial({I: 1.0})
            row.append(xfield(i, poly.to_field())(z0[None, :])[0])
        rows.append(np.asarray(row))
    system = np.vstack(rows)
    assert np.linalg.matrix_rank(system) == len(basis)


def test_polynomial_evaluate_and_degree():
    p = Polynomial({(0, 0, 0): 1.0, (1, 0, 0): 2.0, (0, 0, 1): -1.0})
    assert p.homogeneous_degree() == 2
    z = np.array([[0.5, 0.0, 0.3]])
    assert p(z)[0] == pytest.approx(1.0 + 1.0 - 0.3)

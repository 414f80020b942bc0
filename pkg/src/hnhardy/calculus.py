"""Left-invariant calculus on H^n.

Multi-indices carry the homogeneous degree d(I) = i_1+...+i_2n + 2*i_{2n+1}.
SmoothField wraps a scalar field with either an exact sympy derivative tower
or central-difference fallbacks; the vector fields

    X_i     = d/dx_i     + 2 x_{i+n} d/dt   (1 <= i <= n)
    X_{i+n} = d/dx_{i+n} - 2 x_i     d/dt   (1 <= i <= n)
    X_{2n+1} = d/dt

close over both representations, so X^I compositions and the sub-Laplacian
L = -sum_{i<=2n} X_i^2 come out of the same machinery.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import itertools

import numpy as np
import sympy as sp

from .grid import Box
from .group import dilate, infer_n, koranyi_norm

MAX_FD_HOMDEG = 4  # nested central differences beyond this are unstable


# ---------------------------------------------------------------------------
# multi-indices and monomials
# ---------------------------------------------------------------------------

def homogeneous_degree(index) -> int:
    """d(I): the t-slot counts twice."""
    index = tuple(index)
    return int(sum(index[:-1]) + 2 * index[-1])


def index_length(index) -> int:
    return int(sum(index))


def monomial_basis(k: int, n: int = 1) -> list:
    """All multi-indices I with d(I) <= k, in lexicographic order."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    dim = 2 * n + 1
    out = []
    # bound each entry by what the homogeneous degree allows
    ranges = [range(k + 1)] * (2 * n) + [range(k // 2 + 1)]
    for idx in itertools.product(*ranges):
        if homogeneous_degree(idx) <= k:
            out.append(idx)
    out.sort()
    return out


def monomial_values(pts: np.ndarray, index) -> np.ndarray:
    """z^I = x_1^{i_1} ... x_{2n}^{i_2n} t^{i_{2n+1}} at given points."""
    pts = np.asarray(pts, dtype=float)
    out = np.ones(pts.shape[:-1])
    for axis, power in enumerate(index):
        if power:
            out = out * pts[..., axis] ** power
    return out


def monomial_matrix(pts: np.ndarray, m: int, n: int = 1, center=None, scale: float = 1.0) -> np.ndarray:
    """Vandermonde of the monomials of homogeneous degree <= m.

    With a center z0 and scale delta the monomials are evaluated in the
    group-translated, dilated coordinate u = (1/delta).(z0^{-1} z); this spans
    the same polynomial space (P_m is translation and dilation invariant) and
    keeps the Gram matrices well conditioned on distant balls.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 2 * n + 1)
    if center is not None:
        from .group import inverse, multiply

        pts = multiply(inverse(np.asarray(center, dtype=float)), pts)
    if scale != 1.0:
        pts = dilate(1.0 / scale, pts)
    basis = monomial_basis(m, n)
    cols = [monomial_values(pts, I) for I in basis]
    return np.stack(cols, axis=-1)


@dataclass
class Polynomial:
    """Finitely supported coefficient map over the monomials z^I."""

    coefficients: dict
    n: int = 1

    def homogeneous_degree(self) -> int:
        degs = [homogeneous_degree(I) for I, c in self.coefficients.items() if c != 0]
        return max(degs, default=0)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for I, c in self.coefficients.items():
            if c != 0:
                out = out + c * monomial_values(pts, I)
        return out

    def to_field(self) -> "SmoothField":
        syms = coordinate_symbols(self.n)
        expr = sp.Integer(0)
        for I, c in self.coefficients.items():
            term = sp.Float(c)
            for axis, power in enumerate(I):
                term *= syms[axis] ** power
            expr += term
        return SmoothField.from_sympy(expr, self.n)


# ---------------------------------------------------------------------------
# smooth fields
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def coordinate_symbols(n: int):
    names = [f"x{i+1}" for i in range(2 * n)] + ["t"]
    return sp.symbols(names, real=True)


class SmoothField:
    """Scalar field on H^n, differentiable exactly (sympy) or by differences."""

    def __init__(self, func, n: int = 1, expr=None, fd_step: float = 1e-4,
                 support_radius: float | None = None):
        self._func = func
        self.n = n
        self.expr = expr
        self.fd_step = fd_step
        self.support_radius = support_radius

    @classmethod
    def from_sympy(cls, expr, n: int = 1, support_radius=None) -> "SmoothField":
        syms = coordinate_symbols(n)
        fn = sp.lambdify(syms, expr, "numpy")

        def func(pts):
            pts = np.asarray(pts, dtype=float)
            coords = [pts[..., a] for a in range(2 * n + 1)]
            out = fn(*coords)
            return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()

        return cls(func, n=n, expr=expr, support_radius=support_radius)

    @classmethod
    def from_callable(cls, func, n: int = 1, fd_step: float = 1e-4, support_radius=None) -> "SmoothField":
        return cls(func, n=n, fd_step=fd_step, support_radius=support_radius)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self._func(np.asarray(pts, dtype=float))

    @property
    def analytic(self) -> bool:
        return self.expr is not None

    @property
    def exact_derivatives(self) -> bool:
        """True when xderiv/partial are exact rather than finite differences."""
        return self.analytic

    def partial(self, axis: int) -> "SmoothField":
        """Euclidean partial along a coordinate axis."""
        if self.analytic:
            syms = coordinate_symbols(self.n)
            return SmoothField.from_sympy(sp.diff(self.expr, syms[axis]), self.n,
                                          support_radius=self.support_radius)
        h = self.fd_step
        e = np.zeros(2 * self.n + 1)
        e[axis] = h
        base = self._func

        def diff(pts):
            pts = np.asarray(pts, dtype=float)
            return (base(pts + e) - base(pts - e)) / (2.0 * h)

        # shrink the step for nested differencing (stability of X^I)
        return SmoothField(diff, n=self.n, fd_step=h * 0.5,
                           support_radius=self.support_radius)

    def scaled(self, alpha: float) -> "SmoothField":
        if self.analytic:
            return SmoothField.from_sympy(alpha * self.expr, self.n,
                                          support_radius=self.support_radius)
        base = self._func
        return SmoothField(lambda pts: alpha * base(pts), n=self.n,
                           fd_step=self.fd_step, support_radius=self.support_radius)

    def xderiv(self, i: int) -> "SmoothField":
        """The field X_i f for 1 <= i <= 2n+1."""
        n = self.n
        if not 1 <= i <= 2 * n + 1:
            raise ValueError(f"field index {i} out of range 1..{2*n+1}")
        t_axis = 2 * n
        if i == 2 * n + 1:
            return self.partial(t_axis)
        if self.analytic:
            syms = coordinate_symbols(n)
            if i <= n:
                expr = sp.diff(self.expr, syms[i - 1]) + 2 * syms[i + n - 1] * sp.diff(self.expr, syms[t_axis])
            else:
                expr = sp.diff(self.expr, syms[i - 1]) - 2 * syms[i - n - 1] * sp.diff(self.expr, syms[t_axis])
            return SmoothField.from_sympy(expr, n, support_radius=self.support_radius)
        fp = self.partial(i - 1)
        ft = self.partial(t_axis)
        if i <= n:
            coef_axis, sign = i + n - 1, 2.0
        else:
            coef_axis, sign = i - n - 1, -2.0

        def func(pts):
            pts = np.asarray(pts, dtype=float)
            return fp(pts) + sign * pts[..., coef_axis] * ft(pts)

        return SmoothField(func, n=n, fd_step=min(fp.fd_step, ft.fd_step),
                           support_radius=self.support_radius)


def left_translate(field: SmoothField, w: np.ndarray) -> SmoothField:
    """The field z -> f(w . z)."""
    from .group import multiply

    w = np.asarray(w, dtype=float)
    base = field

    def func(pts):
        return base(multiply(w, np.asarray(pts, dtype=float)))

    return SmoothField(func, n=field.n, fd_step=field.fd_step)


def dilated_field(field: SmoothField, r: float) -> SmoothField:
    """The field z -> f(r . z)."""
    base = field

    def func(pts):
        return base(dilate(r, np.asarray(pts, dtype=float)))

    out = SmoothField(func, n=field.n, fd_step=field.fd_step)
    if type(field) is SmoothField and field.analytic:
        syms = coordinate_symbols(field.n)
        sub = {s: r * s for s in syms[:-1]}
        sub[syms[-1]] = r * r * syms[-1]
        out = SmoothField.from_sympy(field.expr.subs(sub, simultaneous=True), field.n)
    return out


def xfield(i: int, f: SmoothField) -> SmoothField:
    """The field X_i f for 1 <= i <= 2n+1."""
    return f.xderiv(i)


def vector_field(i: int, f: SmoothField, z: np.ndarray, h: float | None = None) -> float:
    """Evaluate X_i f at z (exact when f is analytic, else central differences)."""
    if h is not None and not f.analytic:
        f = SmoothField(f._func, n=f.n, fd_step=h)
    if h is not None and h <= 0:
        raise ValueError("step must be positive")
    val = xfield(i, f)(np.asarray(z, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def apply_multiindex_field(index, f: SmoothField, max_fd_homdeg: int = MAX_FD_HOMDEG) -> SmoothField:
    """X^I f = X_1^{i_1} ... X_{2n+1}^{i_{2n+1}} f (rightmost factor acts first)."""
    index = tuple(int(v) for v in index)
    if len(index) != 2 * f.n + 1 or any(v < 0 for v in index):
        raise ValueError("bad multi-index")
    if not f.exact_derivatives and homogeneous_degree(index) > max_fd_homdeg:
        raise ValueError(
            f"d(I)={homogeneous_degree(index)} exceeds the finite-difference "
            f"stability bound {max_fd_homdeg}; supply analytic derivatives")
    g = f
    for axis in reversed(range(len(index))):
        for _ in range(index[axis]):
            g = xfield(axis + 1, g)
    return g


def apply_multiindex(index, f: SmoothField, z: np.ndarray, **kw) -> float:
    val = apply_multiindex_field(index, f, **kw)(np.asarray(z, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def sublaplacian_field(f: SmoothField) -> SmoothField:
    """L f = -sum_{i=1}^{2n} X_i^2 f."""
    n = f.n
    parts = [xfield(i, xfield(i, f)) for i in range(1, 2 * n + 1)]
    if all(type(p) is SmoothField and p.analytic for p in parts):
        expr = -sum(p.expr for p in parts)
        return SmoothField.from_sympy(expr, n, support_radius=f.support_radius)

    def func(pts):
        out = -parts[0](pts)
        for p in parts[1:]:
            out = out - p(pts)
        return out

    return SmoothField(func, n=n, fd_step=f.fd_step, support_radius=f.support_radius)


def sublaplacian(f: SmoothField, z: np.ndarray, h: float | None = None) -> float:
    if h is not None and not f.analytic:
        f = SmoothField(f._func, n=f.n, fd_step=h)
    val = sublaplacian_field(f)(np.asarray(z, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# Schwartz seminorms
# ---------------------------------------------------------------------------

def derivative_tower(phi: SmoothField, max_deg: int) -> dict:
    """All X^I phi with d(I) <= max_deg, built incrementally.

    X^I = X_1^{i_1} X_2^{i_2} ... applies the rightmost factor first, so
    X^I f = X_k (X^{I-e_k} f) with k the first nonzero slot of I.
    """
    dim = 2 * phi.n + 1
    zero = (0,) * dim
    fields = {zero: phi}
    for I in sorted(monomial_basis(max_deg, phi.n), key=lambda J: (homogeneous_degree(J), J)):
        if I == zero or I in fields:
            continue
        k = next(a for a, v in enumerate(I) if v > 0)
        parent = tuple(v - 1 if a == k else v for a, v in enumerate(I))
        fields[I] = xfield(k + 1, fields[parent])
    return fields


def schwartz_seminorm(phi: SmoothField, N: int, box: Box, resolution=24) -> float:
    """Grid approximation of sum_{d(I)<=N} sup_z (1+rho(z))^N |X^I phi(z)|.

    The sup is taken over the sample points of the box, so phi must decay
    inside it for the value to approximate the global seminorm.
    """
    from .grid import GridFunction

    if not phi.exact_derivatives and N > MAX_FD_HOMDEG:
        raise ValueError("seminorm order exceeds finite-difference stability; "
                         "supply an analytic field")
    g = GridFunction.zeros(box, resolution)
    pts = g.points()
    weight = (1.0 + koranyi_norm(pts)) ** N
    total = 0.0
    for I, fld in derivative_tower(phi, N).items():
        total += float(np.max(weight * np.abs(fld(pts))))
    return total


# ---------------------------------------------------------------------------
# polynomial coefficient algebra (exact X_i on coefficient dicts)
# ---------------------------------------------------------------------------

def poly_eval(coeffs: dict, pts: np.ndarray, power_cache: dict | None = None) -> np.ndarray:
    """Evaluate a coefficient dict; power tables are shared across monomials."""
    pts = np.asarray(pts, dtype=float)
    out = np.zeros(pts.shape[:-1])
    cache = power_cache if power_cache is not None else {}

    def axis_power(axis, power):
        key = (axis, power)
        if key not in cache:
            cache[key] = pts[..., axis] ** power
        return cache[key]

    for I, c in coeffs.items():
        if not c:
            continue
        term = None
        for axis, power in enumerate(I):
            if power:
                p = axis_power(axis, power)
                term = p if term is None else term * p
        out = out + (c if term is None else c * term)
    return out


def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for I, ca in a.items():
        for J, cb in b.items():
            K = tuple(i + j for i, j in zip(I, J))
            out[K] = out.get(K, 0.0) + ca * cb
    return {I: c for I, c in out.items() if c != 0.0}


def poly_add(a: dict, b: dict, scale: float = 1.0) -> dict:
    out = dict(a)
    for I, c in b.items():
        out[I] = out.get(I, 0.0) + scale * c
    return {I: c for I, c in out.items() if c != 0.0}


def poly_partial(coeffs: dict, axis: int) -> dict:
    out: dict = {}
    for I, c in coeffs.items():
        if I[axis] > 0:
            J = tuple(v - 1 if a == axis else v for a, v in enumerate(I))
            out[J] = out.get(J, 0.0) + c * I[axis]
    return out


def poly_xderiv(coeffs: dict, i: int, n: int) -> dict:
    """X_i acting exactly on a polynomial coefficient dict."""
    t_axis = 2 * n
    if i == 2 * n + 1:
        return poly_partial(coeffs, t_axis)
    dt = poly_partial(coeffs, t_axis)
    if i <= n:
        coef_axis, sign = i + n - 1, 2.0
    else:
        coef_axis, sign = i - n - 1, -2.0
    e = tuple(1 if a == coef_axis else 0 for a in range(2 * n + 1))
    return poly_add(poly_partial(coeffs, i - 1), poly_mul({e: sign}, dt))


def rho4_coeffs(n: int = 1) -> dict:
    """rho^4 = (sum x_i^2)^2 + t^2 as a coefficient dict."""
    dim = 2 * n + 1
    out: dict = {}

    def unit(axis, power):
        return tuple(power if a == axis else 0 for a in range(dim))

    for i in range(2 * n):
        out[unit(i, 4)] = out.get(unit(i, 4), 0.0) + 1.0
    for i in range(2 * n):
        for j in range(i + 1, 2 * n):
            I = tuple((2 if a in (i, j) else 0) for a in range(dim))
            out[I] = out.get(I, 0.0) + 2.0
    out[unit(dim - 1, 2)] = 1.0
    return out


# ---------------------------------------------------------------------------
# radial fields: sum_k c_k(z) * psi^(k)(rho^4), exact derivative tower
# ---------------------------------------------------------------------------

class BumpProfile:
    """psi(v) = (1 - v/R^4)^p on v < R^4, zero outside; C^{p-1} at the edge."""

    def __init__(self, radius: float, power: int):
        self.radius = float(radius)
        self.power = int(power)
        self.v_edge = self.radius ** 4

    def deriv(self, k: int, v: np.ndarray) -> np.ndarray:
        p = self.power
        if k > p:
            return np.zeros_like(v)
        coef = 1.0
        for j in range(k):
            coef *= (p - j)
        coef *= (-1.0 / self.v_edge) ** k
        w = 1.0 - v / self.v_edge
        return coef * np.where(w > 0.0, w, 0.0) ** (p - k)


class PowerProfile:
    """psi(v) = v^alpha (e.g. alpha = -n/2 gives rho^{-2n}); singular at v=0."""

    def __init__(self, alpha: float):
        self.alpha = float(alpha)

    def deriv(self, k: int, v: np.ndarray) -> np.ndarray:
        coef = 1.0
        for j in range(k):
            coef *= (self.alpha - j)
        with np.errstate(divide="ignore"):
            return coef * v ** (self.alpha - k)


class RadialPolyField(SmoothField):
    """Fields of the form sum_k c_k(z) psi^(k)(rho(z)^4).

    Closed under X_i: X_i[c psi^(k)] = (X_i c) psi^(k) + c (X_i rho^4) psi^(k+1),
    all in exact coefficient algebra.  Covers the bump dictionary and the
    fundamental-solution kernel with its derivatives.
    """

    def __init__(self, profile, terms: dict, n: int = 1):
        self.profile = profile
        self.terms = {k: dict(c) for k, c in terms.items() if c}
        self._rho4 = rho4_coeffs(n)
        support = profile.radius if isinstance(profile, BumpProfile) else None
        super().__init__(self._eval, n=n, expr=None, support_radius=support)

    @property
    def exact_derivatives(self) -> bool:
        return True

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        cache: dict = {}
        v = poly_eval(self._rho4, pts, cache)
        out = np.zeros(pts.shape[:-1])
        for k, coeffs in self.terms.items():
            out = out + poly_eval(coeffs, pts, cache) * self.profile.deriv(k, v)
        if isinstance(self.profile, BumpProfile):
            out = np.where(v < self.profile.v_edge, out, 0.0)
        return out

    def xderiv(self, i: int) -> "RadialPolyField":
        xv = poly_xderiv(self._rho4, i, self.n)
        new: dict = {}
        for k, c in self.terms.items():
            new[k] = poly_add(new.get(k, {}), poly_xderiv(c, i, self.n))
            new[k + 1] = poly_add(new.get(k + 1, {}), poly_mul(c, xv))
        return RadialPolyField(self.profile, new, self.n)

    def partial(self, axis: int) -> "RadialPolyField":
        dv = poly_partial(self._rho4, axis)
        new: dict = {}
        for k, c in self.terms.items():
            new[k] = poly_add(new.get(k, {}), poly_partial(c, axis))
            new[k + 1] = poly_add(new.get(k + 1, {}), poly_mul(c, dv))
        return RadialPolyField(self.profile, new, self.n)

    def scaled(self, alpha: float) -> "RadialPolyField":
        return RadialPolyField(self.profile,
                               {k: {I: alpha * c for I, c in cs.items()}
                                for k, cs in self.terms.items()}, self.n)


def radial_poly_bump(n: int = 1, radius: float = 1.0, power: int = 8,
                     weight: dict | None = None) -> RadialPolyField:
    """weight(z) * (1 - (rho/radius)^4)^power, supported on B(e, radius).

    `power` >= N+1 keeps the d(I) <= N derivative tower continuous across the
    support edge; the optional weight is a polynomial coefficient dict.
    """
    one = tuple(0 for _ in range(2 * n + 1))
    return RadialPolyField(BumpProfile(radius, power), {0: weight or {one: 1.0}}, n)


def fundamental_kernel_field(n: int = 1) -> RadialPolyField:
    """rho^{-2n} = (rho^4)^{-n/2} as a differentiable radial field (c_n not applied)."""
    one = tuple(0 for _ in range(2 * n + 1))
    return RadialPolyField(PowerProfile(-n / 2.0), {0: {one: 1.0}}, n)


def gaussian_like(n: int = 1, x_scale: float = 1.0, t_scale: float = 1.0,
                  center=None) -> SmoothField:
    """exp(-|x-cx|^2/xs^2 - (t-ct)^2/ts^2); Schwartz-class, exact tower."""
    syms = coordinate_symbols(n)
    if center is None:
        center = np.zeros(2 * n + 1)
    center = np.asarray(center, dtype=float)
    expr = sp.exp(
        -sum((syms[i] - center[i]) ** 2 for i in range(2 * n)) / x_scale ** 2
        - (syms[-1] - center[-1]) ** 2 / t_scale ** 2
    )
    return SmoothField.from_sympy(expr, n)

"""Construction and validation of atoms for the Orlicz-Hardy machinery.

An atom is a grid function supported in a Koranyi ball B with the size bound
||a||_{p0} <= |B|^{1/p0} ||chi_B||_Phi^{-1} and vanishing moments against all
monomials of homogeneous degree <= m.  Construction projects a bump onto the
moment space in unweighted L^2(B) (any moment-killing projection suffices and
L^2 gives a linear solve), then rescales to meet the size bound exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import monomial_basis, monomial_matrix, monomial_values
from .grid import Box, GridFunction
from .group import GroupConfig, KoranyiBall, ball_volume
from .orlicz import OrliczSpec, indicator_norm


def critical_moment_order(phi: OrliczSpec, n: int = 1) -> int:
    """m_Phi = Q * (floor(1/i(Phi) - 1) + 1), never negative.

    For i(Phi) > 1 the floor argument is negative and the order collapses to
    zero: only the plain cancellation is forced.
    """
    i_phi = phi.lower_index
    if not (i_phi > 0 and math.isfinite(i_phi)):
        raise ValueError("lower type index metadata required")
    Q = GroupConfig(n).Q
    return max(0, Q * (math.floor(1.0 / i_phi - 1.0) + 1))


@dataclass
class Atom:
    """Candidate (Phi, p0, m)-atom: samples + ball + parameters."""

    samples: GridFunction
    ball: KoranyiBall
    phi: OrliczSpec
    p0: float  # math.inf for the sup-norm variant
    m: int

    @property
    def n(self) -> int:
        return self.samples.n

    def size_bound(self) -> float:
        """|B|^{1/p0} * ||chi_B||_Phi^{-1} (the |B| factor degenerates at p0 = inf)."""
        vol = ball_volume(self.ball.radius, self.n)
        chi = indicator_norm(vol, self.phi)
        if math.isinf(self.p0):
            return 1.0 / chi
        return vol ** (1.0 / self.p0) / chi


def moment_scale(atom: Atom, index) -> float:
    """Normalization sup_B |z^I| for relative moment slacks on distant balls."""
    c = np.asarray(atom.ball.center)
    r = atom.ball.radius
    hi = np.abs(c) + np.array([r] * (2 * atom.n) + [r * r + 2 * r * np.linalg.norm(c[:-1])])
    return float(max(1.0, monomial_values(hi[None, :], index)[0]))


def validate_atom(atom: Atom, *, moment_tol: float = 1e-10, size_tol: float = 1e-8,
                  support_tol: float = 1e-12, min_cells_across: int = 16,
                  scale_moments: bool = False) -> dict:
    """Check a1 (support), a2 (size), a3 (moments) and report measured slack.

    moment_tol is relative to ||a||_inf * |B| (and optionally the monomial
    scale across B, for balls far from the origin where raw monomials are
    large).  Requires the grid to resolve the ball unless min_cells_across
    is lowered (decomposition atoms are grid-limited by construction).
    """
    g = atom.samples
    cells_across = 2.0 * atom.ball.radius / float(g.spacing[:-1].max())
    if cells_across < min_cells_across:
        raise ValueError(
            f"ball under-resolved: {cells_across:.1f} cells across < {min_cells_across}")
    pts = g.flat_points()
    vals = g.values.reshape(-1)
    sup = float(np.abs(vals).max(initial=0.0))
    inside = atom.ball.contains(pts)
    out_max = float(np.abs(vals[~inside]).max(initial=0.0))
    support_ok = out_max <= support_tol * max(sup, 1.0)

    bound = atom.size_bound()
    if math.isinf(atom.p0):
        size_val = sup
    else:
        size_val = g.lp_norm(atom.p0)
    size_ok = size_val <= bound * (1.0 + size_tol)

    vol = ball_volume(atom.ball.radius, atom.n)
    cell = g.cell_volume
    moments = {}
    worst = 0.0
    base = max(sup, 1e-300) * vol
    for I in monomial_basis(atom.m, atom.n):
        mom = float((vals * monomial_values(pts, I)).sum() * cell)
        scale = moment_scale(atom, I) if scale_moments else 1.0
        rel = abs(mom) / (base * scale)
        moments[str(I)] = {"value": mom, "relative": rel}
        worst = max(worst, rel)
    moments_ok = worst <= moment_tol

    return {
        "support": {"pass": bool(support_ok), "outside_max": out_max},
        "size": {"pass": bool(size_ok), "value": size_val, "bound": bound},
        "moments": {"pass": bool(moments_ok), "worst_relative": worst, "per_index": moments},
        "pass": bool(support_ok and size_ok and moments_ok),
    }


def grid_for_ball(ball: KoranyiBall, cells_across: int = 32, pad: float = 1.1) -> tuple:
    """Box/resolution pair covering the ball's bounding slab."""
    c = np.asarray(ball.center)
    r = ball.radius * pad
    # Koranyi ball extents: |dx| < r, |dt - shear| < r^2 with shear <= 2 r |cx|
    x_half = r
    t_half = r * r + 2.0 * r * float(np.linalg.norm(c[:-1]))
    lo = np.concatenate([c[:-1] - x_half, [c[-1] - t_half]])
    hi = np.concatenate([c[:-1] + x_half, [c[-1] + t_half]])
    res = [cells_across] * (2 * ball.n) + [max(8, int(round(cells_across * t_half / x_half)))]
    # keep the t-resolution in check for very sheared balls
    res[-1] = min(res[-1], 4 * cells_across)
    return Box(tuple(lo), tuple(hi)), tuple(res)


def project_out_moments(vals: np.ndarray, pts: np.ndarray, weights, m: int, n: int,
                        center, scale: float) -> np.ndarray:
    """Least-squares removal of the weighted span of {z^I : d(I) <= m}.

    Solving the weighted normal equations makes every moment of the residual
    against d(I) <= m monomials vanish to solver precision, regardless of how
    few quadrature points the support carries (min-norm solution).
    """
    V = monomial_matrix(pts, m, n, center=center, scale=scale)
    w = np.sqrt(np.asarray(weights, dtype=float))
    if w.ndim == 0:
        w = np.full(vals.shape, float(w))
    A = V * w[:, None]
    b = vals * w
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return vals - V @ coef


def make_atom(bump, ball: KoranyiBall, phi: OrliczSpec, p0: float = math.inf,
              m: int | None = None, *, grid: GridFunction | None = None,
              cells_across: int = 32, degenerate_tol: float = 1e-12) -> Atom:
    """Build a (Phi, p0, m)-atom from a bump profile supported in the ball.

    The bump (callable or SmoothField) is sampled, masked to the ball,
    projected against the moment space, and rescaled to meet the size bound
    with equality.  m defaults to the critical order of Phi.  Raises when the
    projection annihilates the bump (it lay in the monomial span).
    """
    n = ball.n
    if m is None:
        m = critical_moment_order(phi, n)
    if m < critical_moment_order(phi, n):
        raise ValueError(f"moment order {m} below the critical order "
                         f"{critical_moment_order(phi, n)} of this Orlicz function")
    if grid is None:
        box, res = grid_for_ball(ball, cells_across)
        g = GridFunction.zeros(box, res)
    else:
        g = grid.with_values(np.zeros(grid.resolution))
    pts = g.flat_points()
    inside = ball.contains(pts)
    raw = np.asarray(bump(pts), dtype=float) * inside
    if not np.any(raw != 0.0):
        raise ValueError("bump vanishes on the ball")
    residual = np.where(inside, project_out_moments(raw, pts, inside.astype(float),
                                                    m, n, ball.center, ball.radius), 0.0)
    scale_ref = float(np.abs(raw).max())
    if float(np.abs(residual).max()) <= degenerate_tol * scale_ref:
        raise ValueError("bump lies in the monomial span; projection is degenerate")
    g.values = residual.reshape(g.resolution)

    atom = Atom(g, ball, phi, p0, m)
    bound = atom.size_bound()
    current = float(np.abs(g.values).max()) if math.isinf(p0) else g.lp_norm(p0)
    g.values *= bound / current
    return atom


def infinity_atom_as(atom: Atom, p0: float) -> Atom:
    """Reinterpret a (Phi, inf, m)-atom as a candidate (Phi, p0, m)-atom."""
    if not 1.0 < p0 < math.inf:
        raise ValueError("p0 must lie in (1, inf)")
    return Atom(atom.samples, atom.ball, atom.phi, p0, atom.m)


def moment_gram(ball: KoranyiBall, m: int, cells_across: int = 32) -> np.ndarray:
    """Gram matrix of the centered monomials over the ball (midpoint rule)."""
    box, res = grid_for_ball(ball, cells_across)
    g = GridFunction.zeros(box, res)
    pts = g.flat_points()
    inside = ball.contains(pts)
    V = monomial_matrix(pts[inside], m, ball.n, center=ball.center, scale=ball.radius)
    return (V.T @ V) * g.cell_volume


def atom_to_manifest(atom: Atom) -> dict:
    """JSON-ready description; the sample payload is stored separately."""
    return {
        "ball": {"center": list(atom.ball.center), "radius": atom.ball.radius},
        "params": {
            "family": atom.phi.to_json(),
            "p0": "inf" if math.isinf(atom.p0) else atom.p0,
            "m": atom.m,
        },
    }

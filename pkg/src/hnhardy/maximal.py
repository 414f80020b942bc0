"""Hardy-Littlewood, discrete, peak and grand maximal operators on grids.

Scales are dyadic, t_j = 2^{-j} over a finite j-window; ball and kernel
integrals use the canonical node rules from `quadrature`, so reported
suprema are lower bounds of the true ones.  Balls are clipped to the box
and averages use the clipped measure (desk-scale boundary policy).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .calculus import SmoothField, radial_poly_bump, schwartz_seminorm
from .grid import Box, GridFunction
from .group import GroupConfig, koranyi_norm
from .orlicz import OrliczSpec, luxemburg_norm
from .quadrature import NodeRule, kernel_rule, unit_ball_rule


def default_offsets(n: int = 1, reach: float = 0.5, axes_only: bool = True) -> np.ndarray:
    """Center offsets o (rho(o) <= reach) for the uncentered-ball scan.

    The scan supremum stays a modest lower bound of the true uncentered
    maximal function; reach ~ 0.5 keeps indicator decay at the (delta/rho)^Q
    scale rather than the larger uncentered constant.
    """
    dim = 2 * n + 1
    offs = [np.zeros(dim)]
    for a in range(2 * n):
        for s in (+1.0, -1.0):
            o = np.zeros(dim)
            o[a] = s * reach
            offs.append(o)
    if not axes_only:
        for s in (+1.0, -1.0):
            o = np.zeros(dim)
            o[-1] = s * reach ** 2
            offs.append(o)
    return np.asarray(offs)


@dataclass(frozen=True)
class MaximalConfig:
    """Discretization of the scale/ball suprema.

    j_range: dyadic scales t = 2^{-j}, j in [j_min, j_max].
    radii:   dyadic Koranyi-ball radii for the HL maximal (None = derived
             from the grid: spacing*2 up to the box diameter).
    N:       Schwartz seminorm order (default: smallest integer > Q+2).
    L:       peak maximal damping exponent.
    """

    j_range: tuple = (-6, 6)
    radii: tuple | None = None
    N: int = 7
    L: int = 3
    ball_res: int = 7
    kernel_res: int = 7
    offset_reach: float = 0.5
    offset_axes_only: bool = True
    boundary: str = "clip"  # "clip": renormalize by in-box measure; "zero": extend f by 0

    def scales(self) -> np.ndarray:
        j_lo, j_hi = self.j_range
        return 2.0 ** (-np.arange(j_lo, j_hi + 1, dtype=float))

    def js(self) -> np.ndarray:
        j_lo, j_hi = self.j_range
        return np.arange(j_lo, j_hi + 1)

    def radii_for(self, g: GridFunction) -> np.ndarray:
        if self.radii is not None:
            return np.asarray(self.radii, dtype=float)
        h = float(g.spacing.max())
        # balls beyond the box half-width degenerate under clipping
        r_cap = float(g.box.widths().max()) / 2.0
        r = 2.0 * h
        out = []
        while r <= r_cap:
            out.append(r)
            r *= 2.0
        return np.asarray(out if out else [2.0 * h])

    @staticmethod
    def default_N(n: int = 1) -> int:
        return GroupConfig(n).Q + 3  # smallest integer > Q+2


def resolvable_scales(cfg: MaximalConfig, g: GridFunction, support_radius: float = 1.0) -> np.ndarray:
    """Scales whose kernel footprint spans at least 3 cells of g."""
    h = float(g.spacing[:-1].max())
    return np.array([t for t in cfg.scales() if 2.0 * t * support_radius >= 3.0 * h])


def clip_config_to_grid(cfg: MaximalConfig, g: GridFunction, support_radius: float = 1.0) -> MaximalConfig:
    """Shrink the j-window to scales the grid resolves."""
    h = float(g.spacing[:-1].max())
    j_lo, j_hi = cfg.j_range
    js = [j for j in range(j_lo, j_hi + 1) if 2.0 * 2.0 ** (-j) * support_radius >= 3.0 * h]
    if not js:
        raise ValueError("no resolvable scales on this grid")
    return replace(cfg, j_range=(min(js), max(js)))


# ---------------------------------------------------------------------------
# convolution with dilated profiles
# ---------------------------------------------------------------------------

def _radial_profile_terms(phi):
    """(exps, coefs, R4, power) when phi is a plain weighted radial bump."""
    from .calculus import BumpProfile, RadialPolyField

    if not isinstance(phi, RadialPolyField) or not isinstance(phi.profile, BumpProfile):
        return None
    if set(phi.terms) != {0}:
        return None
    coeffs = phi.terms[0]
    exps = np.array(list(coeffs.keys()), dtype=np.int64).reshape(-1, 3)
    coefs = np.array(list(coeffs.values()), dtype=float)
    return exps, coefs, phi.profile.v_edge, float(phi.profile.power)


def _aggregate_source(f: GridFunction, block: int) -> tuple:
    """Masses f*vol summed over block^dim cell groups (supported cells only)."""
    vals = f.values
    res = np.asarray(f.resolution)
    nblocks = -(-res // block)
    pad = nblocks * block - res
    padded = np.pad(vals, [(0, int(p)) for p in pad])
    blocks = padded.reshape(nblocks[0], block, nblocks[1], block, nblocks[2], block)
    masses = blocks.sum(axis=(1, 3, 5)) * f.cell_volume
    # mass-weighted block centers keep the first moment of each block
    pts = np.pad(f.points(), [(0, int(p)) for p in pad] + [(0, 0)], mode="edge")
    pts = pts.reshape(nblocks[0], block, nblocks[1], block, nblocks[2], block, 3)
    wsum = np.abs(padded).reshape(blocks.shape)
    denom = wsum.sum(axis=(1, 3, 5))
    centers = (pts * wsum[..., None]).sum(axis=(1, 3, 5))
    geom = pts.mean(axis=(1, 3, 5))
    centers = np.where(denom[..., None] > 0, centers / np.maximum(denom, 1e-300)[..., None], geom)
    keep = denom.reshape(-1) != 0.0
    return centers.reshape(-1, 3)[keep], masses.reshape(-1)[keep]


def _conv_all_scales(f: GridFunction, phi: SmoothField, scales: np.ndarray,
                     cfg: MaximalConfig) -> np.ndarray:
    """(f * phi_t) for every t; shape (nscales, *resolution).

    Fine scales integrate over the dilated kernel nodes (gather); once t
    exceeds a few grid spacings the gather lattice undersamples f, so the
    adjoint source-sum with block-aggregated masses takes over (the kernel
    is then smooth across blocks).
    """
    lo = np.asarray(f.box.lo)
    h = f.spacing
    hmax = float(h.max())
    scales = np.asarray(scales, dtype=float)
    terms = _radial_profile_terms(phi)
    t_switch = 4.0 * hmax if terms is not None else np.inf
    fine_idx = np.nonzero(scales < t_switch)[0]
    out = np.zeros((scales.size, *f.resolution))
    if fine_idx.size:
        rule = kernel_rule(phi, f.n, cfg.kernel_res)
        conv = _kernels.convolve_scales(f.values, lo, h, rule.nodes, rule.weights,
                                        scales[fine_idx])
        for pos, idx in enumerate(fine_idx):
            out[idx] = conv[pos]
    for idx in np.nonzero(scales >= t_switch)[0]:
        t = float(scales[idx])
        block = max(1, int(t / (6.0 * hmax)))
        src_pts, masses = _aggregate_source(f, block)
        exps, coefs, R4, power = terms
        out[idx] = _kernels.convolve_source_sum(
            masses, src_pts, lo, h, np.asarray(f.resolution), t,
            exps, coefs, R4, power)
    return out


def heat_style_convolution(f: GridFunction, phi: SmoothField, j: int,
                           cfg: MaximalConfig | None = None) -> GridFunction:
    """Group convolution f * phi_t with phi_t = t^{-Q} phi(t^{-1}.) at t = 2^{-j}.

    The t^{-Q} normalization cancels exactly against the dilation of the node
    rule, so the canonical nodes integrate every scale with the same weights.
    Raises when the kernel footprint falls under 3 cells.
    """
    cfg = cfg or MaximalConfig()
    t = 2.0 ** (-j)
    support = getattr(phi, "support_radius", None) or 1.0
    if 2.0 * t * support < 3.0 * float(f.spacing[:-1].max()):
        raise ValueError(f"scale t=2^-{j} is under-resolved on this grid (< 3 cells)")
    out = _conv_all_scales(f, phi, np.array([t]), cfg)[0]
    return f.with_values(out)


def convolution_at_points(f: GridFunction, phi: SmoothField, scales, pts,
                          cfg: MaximalConfig | None = None) -> np.ndarray:
    cfg = cfg or MaximalConfig()
    rule = kernel_rule(phi, f.n, cfg.kernel_res)
    pts = np.asarray(pts, dtype=float).reshape(-1, f.dim)
    return _kernels.convolve_at_points(f.values, np.asarray(f.box.lo), f.spacing,
                                       rule.nodes, rule.weights,
                                       np.asarray(scales, dtype=float), pts)


def _reference_convolution(f: GridFunction, phi: SmoothField, j: int,
                           cfg: MaximalConfig | None = None) -> GridFunction:
    """Slow scipy-interpolation route; cross-checks the numba kernel."""
    from .quadrature import convolution_points

    cfg = cfg or MaximalConfig()
    rule = kernel_rule(phi, f.n, cfg.kernel_res)
    t = 2.0 ** (-j)
    pts = f.flat_points()
    acc = np.zeros(pts.shape[0])
    for v, w in zip(rule.nodes, rule.weights):
        q = convolution_points(pts, t, v[None, :])[:, 0, :]
        acc += w * f.interp(q, mode="constant")
    return f.with_values(acc.reshape(f.resolution))


# ---------------------------------------------------------------------------
# maximal operators
# ---------------------------------------------------------------------------

def discrete_maximal(f: GridFunction, phi: SmoothField,
                     cfg: MaximalConfig | None = None) -> GridFunction:
    """sup_j |f * phi_{2^{-j}}| over the (resolvable) j-window."""
    cfg = cfg or MaximalConfig()
    support = getattr(phi, "support_radius", None) or 1.0
    scales = resolvable_scales(cfg, f, support)
    if scales.size == 0:
        raise ValueError("no resolvable scales on this grid")
    conv = _conv_all_scales(f, phi, scales, cfg)
    return f.with_values(np.abs(conv).max(axis=0))


def peak_maximal(f: GridFunction, phi: SmoothField, L: int | None = None,
                 cfg: MaximalConfig | None = None) -> GridFunction:
    """sup_j sup_w |f*phi_{2^{-j}}|(w) / (1 + 4^j rho(z^{-1}w)^2)^L."""
    cfg = cfg or MaximalConfig()
    L = L if L is not None else cfg.L
    support = getattr(phi, "support_radius", None) or 1.0
    scales = resolvable_scales(cfg, f, support)
    if scales.size == 0:
        raise ValueError("no resolvable scales on this grid")
    conv = np.abs(_conv_all_scales(f, phi, scales, cfg))
    vals = _kernels.peak_quotient_field(conv, np.asarray(f.box.lo), f.spacing,
                                        np.asarray(scales, dtype=float), int(L))
    return f.with_values(vals)


def grand_maximal(f: GridFunction, N: int | None = None,
                  dictionary: list | None = None,
                  cfg: MaximalConfig | None = None) -> GridFunction:
    """sup over a normalized test dictionary and scales of |f * phi_t|.

    Every dictionary member is rescaled to unit Schwartz seminorm of order N;
    the full test-function class is out of reach, so this is a dictionary
    lower bound (comparability with the single-profile maximal functions is
    checked empirically elsewhere).
    """
    cfg = cfg or MaximalConfig()
    N = N if N is not None else cfg.N
    if dictionary is None:
        dictionary = default_dictionary(f.n, N=N)
    if not dictionary:
        raise ValueError("grand maximal needs a nonempty dictionary")
    best = None
    for phi in dictionary:
        m = discrete_maximal(f, phi, cfg)
        best = m.values if best is None else np.maximum(best, m.values)
    return f.with_values(best)


def hl_maximal_field(f: GridFunction, cfg: MaximalConfig | None = None) -> GridFunction:
    """Hardy-Littlewood maximal function on the whole grid."""
    cfg = cfg or MaximalConfig()
    rule = unit_ball_rule(f.n, cfg.ball_res)
    radii = cfg.radii_for(f)
    offsets = default_offsets(f.n, cfg.offset_reach, cfg.offset_axes_only)
    vals = _kernels.ball_max_field(f.values, np.asarray(f.box.lo), f.spacing,
                                   rule.nodes, rule.weights, radii, offsets,
                                   cfg.boundary == "clip")
    return f.with_values(vals)


def hl_maximal(f: GridFunction, z: np.ndarray, cfg: MaximalConfig | None = None) -> float:
    """HL maximal function at one point (must lie inside the grid box)."""
    cfg = cfg or MaximalConfig()
    z = np.asarray(z, dtype=float)
    if not bool(f.box.contains(z)):
        raise ValueError("evaluation point lies outside the grid box")
    rule = unit_ball_rule(f.n, cfg.ball_res)
    radii = cfg.radii_for(f)
    offsets = default_offsets(f.n, cfg.offset_reach, cfg.offset_axes_only)
    return float(_kernels.ball_max_at_point(f.values, np.asarray(f.box.lo), f.spacing,
                                            rule.nodes, rule.weights, radii, offsets, z,
                                            cfg.boundary == "clip"))


# ---------------------------------------------------------------------------
# test-function dictionary
# ---------------------------------------------------------------------------

def normalize_seminorm(phi: SmoothField, N: int, box: Box | None = None,
                       resolution: int = 16) -> SmoothField:
    """Rescale phi so its order-N Schwartz seminorm is 1 on the box."""
    box = box or Box.cube(1.5, phi.n)
    s = schwartz_seminorm(phi, N, box, resolution)
    if s <= 0:
        raise ValueError("degenerate test function")
    return phi.scaled(1.0 / s)


_DICT_CACHE: dict = {}


def default_dictionary(n: int = 1, size: int = 8, N: int | None = None,
                       normalized: bool = True) -> list:
    """Fixed family of polynomial bump profiles (radial and moment-weighted).

    Deterministic by construction; members are compactly supported with an
    exact X^I tower, so the order-N seminorm normalization is cheap.
    """
    from .calculus import poly_add, rho4_coeffs

    N = N if N is not None else MaximalConfig.default_N(n)
    key = (n, size, N, normalized)
    if key in _DICT_CACHE:
        return _DICT_CACHE[key]

    dim = 2 * n + 1
    zero = (0,) * dim

    def mono(axis):
        return tuple(1 if a == axis else 0 for a in range(dim))

    one = {zero: 1.0}
    specs = [
        (one, 1.0, N + 2),
        (one, 0.75, N + 2),
        (one, 1.0, N + 4),
        (poly_add(one, rho4_coeffs(n), scale=-2.0), 1.0, N + 2),
        ({mono(0): 1.0}, 1.0, N + 2),
        ({mono(dim - 1): 1.0}, 1.0, N + 2),
        ({tuple(1 if a in (0, 1) else 0 for a in range(dim)): 1.0}, 1.0, N + 3),
        (poly_add(one, {mono(0): 1.0, mono(min(1, dim - 2)): 1.0}), 0.9, N + 2),
    ]
    out = []
    for weight, radius, power in specs[:size]:
        bump = radial_poly_bump(n, radius, power, weight=weight)
        if normalized:
            bump = normalize_seminorm(bump, N)
        out.append(bump)
    _DICT_CACHE[key] = out
    return out


def radial_base_profile(n: int = 1, N: int | None = None) -> SmoothField:
    """The normalized radial profile used by the single-phi maximal functions."""
    N = N if N is not None else MaximalConfig.default_N(n)
    return normalize_seminorm(radial_poly_bump(n, 1.0, N + 2), N)


def solver_dictionary(n: int = 1, N: int = 2, radius: float = 3.0) -> list:
    """Low-order, wide dictionary for the decomposition ladder.

    At small seminorm order the mass-to-seminorm ratio of a bump grows like
    R^{Q-N}, so wide members keep the grand maximal on the scale of f itself
    and the measured ladder constants stay O(1); see the decisions notes.
    """
    key = ("solver", n, N, float(radius))
    if key in _DICT_CACHE:
        return _DICT_CACHE[key]
    dim = 2 * n + 1
    zero = (0,) * dim

    def mono(axis):
        return tuple(1 if a == axis else 0 for a in range(dim))

    specs = [
        ({zero: 1.0}, radius, N + 2),
        ({zero: 1.0}, 0.6 * radius, N + 2),
        ({mono(0): 1.0, zero: 1.0}, 0.8 * radius, N + 2),
        ({mono(dim - 1): 0.5, zero: 1.0}, 0.8 * radius, N + 3),
    ]
    box = Box.cube(max(1.5, 1.2 * radius), n)
    out = [normalize_seminorm(radial_poly_bump(n, r, p, weight=w), N, box=box)
           for w, r, p in specs]
    _DICT_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------

def fefferman_stein_check(fs: list, r: float, phi: OrliczSpec,
                          cfg: MaximalConfig | None = None,
                          bound: float | None = None) -> dict:
    """Vector-valued maximal inequality report.

    lhs = || (sum (M f_j)^r)^{1/r} ||_Phi, rhs the same with f_j in place of
    M f_j; the ratio is empirical (the theorem's constant is not quantified).
    """
    if r <= 1.0:
        raise ValueError("exponent r must exceed 1")
    if not (phi.lower_index > 1.0 and math.isfinite(phi.upper_index)):
        raise ValueError("Fefferman-Stein check needs type indices in (1, inf)")
    cfg = cfg or MaximalConfig()
    if not fs:
        raise ValueError("need at least one function")
    base = fs[0]
    acc_l = np.zeros(base.resolution)
    acc_r = np.zeros(base.resolution)
    for f in fs:
        m = hl_maximal_field(f, cfg)
        acc_l += m.values ** r
        acc_r += np.abs(f.values) ** r
    lhs = luxemburg_norm(base.with_values(acc_l ** (1.0 / r)), phi)
    rhs = luxemburg_norm(base.with_values(acc_r ** (1.0 / r)), phi)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else float("inf"))
    report = {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "config": {"r": r, "phi": phi.to_json(), "count": len(fs),
                   "radii": list(map(float, cfg.radii_for(base)))},
    }
    if bound is not None:
        report["bound"] = bound
        report["pass"] = bool(ratio <= bound)
    return report

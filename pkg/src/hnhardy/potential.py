"""The sub-Laplacian fundamental solution and Calderon-Hardy machinery.

Covers: the normalizing constant c_n and kernel c_n rho^{-2n}; potentials
b = a * c_n rho^{-2n} with locally refined singular quadrature; truncated
singular suprema T*_I for the homogeneous-degree-2 kernel derivatives; the
maximal functions eta_{q,gamma} and N_{q,gamma} on classes modulo P_k; the
Luxemburg norm of the N-field; and the pointwise-estimate / divergence
demonstrations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .atoms import Atom
from .calculus import (
    RadialPolyField,
    apply_multiindex_field,
    fundamental_kernel_field,
    homogeneous_degree,
    monomial_basis,
    monomial_matrix,
)
from .grid import Box, GridFunction
from .group import GroupConfig, KoranyiBall, ball_volume, koranyi_norm, unit_ball_volume
from .maximal import MaximalConfig, hl_maximal_field
from .orlicz import OrliczSpec, luxemburg_norm
from .quadrature import refined_cell_offsets, translate_nodes, unit_ball_rule


# ---------------------------------------------------------------------------
# normalizing constant
# ---------------------------------------------------------------------------

DELTA_MISMATCH = 4.0  # see cn_constant


def cn_normalizing_integral(n: int = 1, method: str = "radial") -> float:
    """int |x|^2 (rho^4+1)^{-(n+4)/2} dz.

    method="radial" integrates the exact radial reduction (the t-integral has
    the closed Beta form); method="midpoint" is an independent tensor
    midpoint scheme on a truncated box, kept for cross-validation.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if method == "radial":
        # int_R (A^2+t^2)^{-(n+4)/2} dt = A^{1-(n+4)} sqrt(pi) G((n+3)/2)/G((n+4)/2)
        tfac = math.sqrt(math.pi) * math.gamma((n + 3) / 2.0) / math.gamma((n + 4) / 2.0)
        surf = 2.0 * math.pi ** n / math.gamma(n)
        val, err = quad(lambda r: r ** (2 * n + 1) * (r ** 4 + 1.0) ** (-(n + 3) / 2.0),
                        0.0, np.inf, limit=200)
        if err > 1e-8 * abs(val):
            raise ArithmeticError("radial quadrature for c_n did not converge")
        return surf * tfac * val
    if method == "midpoint":
        return _cn_midpoint(n)
    raise ValueError(f"unknown method {method!r}")


@lru_cache(maxsize=None)
def cn_constant(n: int = 1, method: str = "radial") -> float:
    """Normalizing constant of the fundamental solution c_n rho^{-2n}.

    The classical closed form [n(n+2) * int |x|^2 (rho^4+1)^{-(n+4)/2}]^{-1}
    belongs to a convention whose horizontal fields differ from ours by a
    factor 2; with the group law J = 2[[0,-I],[I,0]] and the fields
    X_i = d/dx_i +- 2 x_* d/dt used throughout this package, the radial
    reduction gives <L u, rho^{-2n}> = 8n K_n u(0), which is exactly 4 times
    smaller.  The delta-normalized constant below makes (L u, c_n rho^{-2n})
    = u(0) hold (checked to quadrature accuracy by the test suite).
    """
    return 1.0 / (DELTA_MISMATCH * n * (n + 2) * cn_normalizing_integral(n, method))


def cn_closed_form(n: int = 1) -> float:
    """Independent closed form 1/(8 n K_n) of the delta normalization.

    K_n = (surf(S^{2n-1})/4) * int cos^n = pairing measure constant; for
    n = 1 this is 1/(8 pi).
    """
    surf = 2.0 * math.pi ** n / math.gamma(n)
    cos_int = math.sqrt(math.pi) * math.gamma((n + 1) / 2.0) / math.gamma(n / 2.0 + 1.0)
    K = surf / 4.0 * cos_int
    return 1.0 / (8.0 * n * K)


def _cn_midpoint(n: int, x_half: float = 14.0, res: int = 120) -> float:
    """Tensor midpoint evaluation of the c_n integral on a truncated box.

    Convergence is slow in the tails (integrand ~ rho^{-2n-6}); good to a few
    tenths of a percent, which is all the cross-check needs.
    """
    if n != 1:
        raise NotImplementedError("midpoint scheme implemented for n = 1")
    t_half = x_half ** 2
    hx = 2 * x_half / res
    rest = 4 * res
    ht = 2 * t_half / rest
    x = -x_half + (np.arange(res) + 0.5) * hx
    t = -t_half + (np.arange(rest) + 0.5) * ht
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    R2 = X1 ** 2 + X2 ** 2
    total = 0.0
    for tv in t:
        total += (R2 * (R2 ** 2 + tv ** 2 + 1.0) ** (-(n + 4) / 2.0)).sum()
    return float(total * hx * hx * ht)


def cn_monte_carlo(n: int, samples: int = 10_000_000, seed: int = 0) -> tuple:
    """Stratified Monte-Carlo estimate of the c_n integrand with standard error.

    Strata are Koranyi shells (boxes) 2^k-scaled; proportional sampling keeps
    the variance at the per-shell level so 1e7 samples reach ~0.1% error.
    """
    rng = np.random.default_rng(seed)
    if n != 1:
        raise NotImplementedError("Monte-Carlo check implemented for n = 1")

    def f(pts):
        x2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        return x2 * (x2 ** 2 + pts[:, 2] ** 2 + 1.0) ** (-(n + 4) / 2.0)

    shells = [0.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    total = 0.0
    var = 0.0
    remaining = samples
    nshell = len(shells) - 1
    for k in range(nshell):
        r_in, r_out = shells[k], shells[k + 1]
        m = remaining // (nshell - k)
        remaining -= m
        pts = np.empty((m, 3))
        pts[:, 0] = rng.uniform(-r_out, r_out, m)
        pts[:, 1] = rng.uniform(-r_out, r_out, m)
        pts[:, 2] = rng.uniform(-r_out ** 2, r_out ** 2, m)
        box_vol = (2 * r_out) ** 2 * 2 * r_out ** 2
        vals = f(pts)
        if r_in > 0.0:
            inside_inner = (np.maximum(np.abs(pts[:, 0]), np.abs(pts[:, 1])) < r_in) & \
                           (np.abs(pts[:, 2]) < r_in ** 2)
            vals = np.where(inside_inner, 0.0, vals)
        mean = vals.mean()
        total += box_vol * mean
        var += box_vol ** 2 * vals.var() / m
    # tail beyond the last shell: |integrand| <= rho^{-2n-6}; bound as estimate error
    tail = 2.0 * unit_ball_volume(n) * shells[-1] ** (-2.0)
    return float(total), float(math.sqrt(var) + tail)


# ---------------------------------------------------------------------------
# kernel and its derivatives
# ---------------------------------------------------------------------------

def fundamental_kernel(z: np.ndarray, n: int = 1) -> np.ndarray:
    """c_n rho(z)^{-2n}; raises on the singularity."""
    z = np.asarray(z, dtype=float)
    rho = koranyi_norm(z)
    if np.any(rho == 0.0):
        raise ZeroDivisionError("fundamental kernel evaluated at the origin")
    return cn_constant(n) * rho ** (-2.0 * n)


def fundamental_pairing(u_field, n: int = 1, box: Box | None = None,
                        resolution: int = 48, refine_radius: float = 0.5,
                        refine_factor: int = 8) -> float:
    """<L u, c_n rho^{-2n}> by midpoint quadrature with a graded core.

    Cells within refine_radius of the singularity are re-integrated on a
    refine_factor^dim subgrid; rho^{-2n} is integrable there, so the refined
    midpoint rule converges.  Should return u(0).
    """
    from .calculus import sublaplacian_field

    if box is None:
        R = 1.05 * (getattr(u_field, "support_radius", None) or 1.5)
        box = Box((-R,) * (2 * n) + (-R * R,), (R,) * (2 * n) + (R * R,))
    g = GridFunction.zeros(box, resolution)
    pts = g.flat_points()
    Lu = sublaplacian_field(u_field)
    lu_vals = Lu(pts)
    rho = koranyi_norm(pts)
    near = rho < refine_radius
    with np.errstate(divide="ignore"):
        kern = np.where(rho > 0.0, rho ** (-2.0 * n), 0.0)
    total = float((lu_vals[~near] * kern[~near]).sum() * g.cell_volume)
    offs, sub_vol = refined_cell_offsets(g.spacing, refine_factor)
    for p in pts[near]:
        sub = p[None, :] + offs
        sr = koranyi_norm(sub)
        with np.errstate(divide="ignore"):
            sk = np.where(sr > 0.0, sr ** (-2.0 * n), 0.0)
        total += float((Lu(sub) * sk).sum() * sub_vol)
    return cn_constant(n) * total


@lru_cache(maxsize=None)
def kernel_xderivative(index: tuple, n: int = 1) -> RadialPolyField:
    """X^I rho^{-2n} as an exact radial field (c_n not applied)."""
    K = fundamental_kernel_field(n)
    return apply_multiindex_field(tuple(index), K)


def degree2_indices(n: int = 1) -> list:
    return [I for I in monomial_basis(2, n) if homogeneous_degree(I) == 2]


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    """Quadrature and scan parameters for the potential machinery.

    q must lie in (1, (n+1)/n); gamma = 2 so classes are modulo P_1.
    """

    q: float = 1.2
    gamma: float = 2.0
    singular_factor: int = 8     # subcells per axis when refining singular cells
    singular_reach: float = 3.0  # refine cells within this many cell diagonals
    eta_radii: tuple | None = None
    eps_grid: tuple | None = None
    ball_res: int = 7
    beta: float = 1.0            # covering constant of the engulfing lemma

    def validate(self, n: int = 1) -> None:
        if not 1.0 < self.q < (n + 1) / n:
            raise ValueError(f"exponent q={self.q} outside (1, (n+1)/n) for n={n}")

    @property
    def k_order(self) -> int:
        # gamma = k + t with 0 < t <= 1
        return int(math.ceil(self.gamma)) - 1


def _source_arrays(a) -> tuple:
    """(values, points, cell volume, n) for an Atom or GridFunction source."""
    g = a.samples if isinstance(a, Atom) else a
    vals = g.values.reshape(-1)
    keep = vals != 0.0
    return vals[keep], g.flat_points()[keep], g.cell_volume, g.n, g


def potential(a, out: GridFunction | None = None,
              cfg: SolverConfig | None = None) -> GridFunction:
    """b = a * c_n rho^{-2n} on a grid (linear in a; L b = a weakly).

    Source cells rho-close to the target are re-integrated on a locally
    refined subgrid; rho^{-2n} is integrable (2n < Q) so the refinement
    converges.
    """
    cfg = cfg or SolverConfig()
    vals, pts, vol, n, g = _source_arrays(a)
    target = out if out is not None else g
    hmax = float(np.max(g.spacing[:-1]))
    if float(np.max(target.spacing[:-1])) > 4.0 * max(a.ball.radius if isinstance(a, Atom) else hmax, hmax):
        raise ValueError("output grid too coarse for the source ball")
    offs, sub_vol = refined_cell_offsets(g.spacing, cfg.singular_factor)
    sing_dist = cfg.singular_reach * float(np.linalg.norm(g.spacing))
    out_vals = _kernels.potential_field(vals, pts, vol, target.flat_points(),
                                        2.0 * n, offs, sub_vol, sing_dist)
    return target.with_values(cn_constant(n) * out_vals.reshape(target.resolution))


def potential_at_points(a, tgt_pts: np.ndarray, cfg: SolverConfig | None = None) -> np.ndarray:
    cfg = cfg or SolverConfig()
    vals, pts, vol, n, g = _source_arrays(a)
    offs, sub_vol = refined_cell_offsets(g.spacing, cfg.singular_factor)
    sing_dist = cfg.singular_reach * float(np.linalg.norm(g.spacing))
    tgt = np.asarray(tgt_pts, dtype=float).reshape(-1, 2 * n + 1)
    out = _kernels.potential_field(vals, pts, vol, tgt, 2.0 * n, offs, sub_vol, sing_dist)
    return cn_constant(n) * out


def xderiv_potential_at_points(index, a, tgt_pts: np.ndarray) -> np.ndarray:
    """(a * X^I rho^{-2n})(z) at far-field targets (no singular handling)."""
    vals, pts, vol, n, g = _source_arrays(a)
    fld = kernel_xderivative(tuple(index), n)
    tgt = np.asarray(tgt_pts, dtype=float).reshape(-1, 2 * n + 1)
    from .group import inverse, multiply

    out = np.empty(tgt.shape[0])
    for i, z in enumerate(tgt):
        rel = multiply(inverse(pts), z)
        out[i] = float((vals * fld(rel)).sum() * vol)
    return out


def truncated_singular_sup(index, a, z: np.ndarray,
                           eps_grid=None, cfg: SolverConfig | None = None) -> np.ndarray:
    """T*_I a (z) = sup_eps |int_{rho(w^{-1}z)>eps} X^I rho^{-2n}(w^{-1}z) a(w) dw|.

    index must have homogeneous degree 2 (the kernel derivative is then
    -Q-homogeneous and genuinely singular, so the truncation matters).
    """
    cfg = cfg or SolverConfig()
    if homogeneous_degree(index) != 2:
        raise ValueError("truncated suprema are for homogeneous-degree-2 derivatives")
    vals, pts, vol, n, g = _source_arrays(a)
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    tgt = z.reshape(-1, 2 * n + 1)
    if eps_grid is None:
        eps_grid = cfg.eps_grid
    if eps_grid is None:
        h = float(np.min(g.spacing[:-1]))
        diam = float(np.linalg.norm(g.box.widths()))
        eps_grid = []
        e = 2.0 * h
        while e < diam:
            eps_grid.append(e)
            e *= 2.0
    eps_grid = np.asarray(eps_grid, dtype=float)
    fld = kernel_xderivative(tuple(index), n)
    from .group import inverse, multiply

    kvals = np.empty((tgt.shape[0], pts.shape[0]))
    for i, zz in enumerate(tgt):
        rel = multiply(inverse(pts), zz)
        rho = koranyi_norm(rel)
        with np.errstate(divide="ignore", invalid="ignore"):
            kv = fld(rel)
        kvals[i] = np.where(rho > 0.0, kv, 0.0)
    out = _kernels.tstar_sup(vals, pts, vol, tgt, kvals, eps_grid)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# eta and N maximal functions
# ---------------------------------------------------------------------------

class PolyClass:
    """Element of L^q_loc modulo P_k, held by one representative.

    The representative is a GridFunction or any callable on points; gamma = 2
    gives k = 1 (classes modulo polynomials of homogeneous degree <= 1).
    """

    def __init__(self, representative, k: int = 1, n: int = 1):
        self.representative = representative
        self.k = k
        self.n = n if not isinstance(representative, GridFunction) else representative.n

    def sample(self, pts: np.ndarray) -> np.ndarray:
        rep = self.representative
        if isinstance(rep, GridFunction):
            return rep.interp(pts, mode="constant")
        return np.asarray(rep(pts), dtype=float)


def _eta_radii(cfg: SolverConfig, g) -> np.ndarray:
    if cfg.eta_radii is not None:
        return np.asarray(cfg.eta_radii, dtype=float)
    if isinstance(g, GridFunction):
        h = float(g.spacing.max())
        cap = float(g.box.widths().max()) / 2.0
        out = []
        r = 2.0 * h
        while r <= cap:
            out.append(r)
            r *= 2.0
        return np.asarray(out if out else [2.0 * h])
    return 2.0 ** np.arange(-3, 4, dtype=float)


def eta_maximal(g, q: float, gamma: float, z: np.ndarray,
                cfg: SolverConfig | None = None) -> float:
    """eta_{q,gamma}(g; z) = sup_r r^{-gamma} (|B(z,r)|^{-1} int_B |g|^q)^{1/q}.

    The sup runs over the dyadic radius grid; reported values are lower
    bounds of the true supremum.
    """
    cfg = cfg or SolverConfig()
    radii = _eta_radii(cfg, g)
    rule = unit_ball_rule(1 if not isinstance(g, GridFunction) else g.n, cfg.ball_res)
    z = np.asarray(z, dtype=float)
    best = 0.0
    for r in radii:
        pts = translate_nodes(z, float(r), rule.nodes)
        if isinstance(g, GridFunction):
            inside = g.box.contains(pts)
            if not inside.any():
                continue
            vals = np.abs(g.interp(pts, mode="nearest")[inside]) ** q
            w = rule.weights[inside]
        else:
            vals = np.abs(np.asarray(g(pts), dtype=float)) ** q
            w = rule.weights
        avg = float((w * vals).sum() / w.sum()) ** (1.0 / q)
        best = max(best, r ** (-gamma) * avg)
    return best


class _EtaObjective:
    """Pre-sampled eta objective in the P_k coefficients at a fixed point.

    All (radius, node) samples are stacked once; an evaluation is a single
    matvec plus segmented averages.
    """

    def __init__(self, G: PolyClass, q: float, gamma: float, z: np.ndarray,
                 cfg: SolverConfig):
        rule = unit_ball_rule(G.n, cfg.ball_res)
        radii = _eta_radii(cfg, G.representative)
        z = np.asarray(z, dtype=float)
        rep = G.representative
        box = rep.box if isinstance(rep, GridFunction) else None
        gvs, Vs, ws, prefs, bounds = [], [], [], [], [0]
        for r in radii:
            pts = translate_nodes(z, float(r), rule.nodes)
            w = rule.weights.copy()
            if box is not None:
                inside = box.contains(pts)
                if not inside.any():
                    continue
                pts, w = pts[inside], w[inside]
            gvs.append(G.sample(pts))
            Vs.append(monomial_matrix(pts, G.k, G.n))
            ws.append(w / w.sum())
            prefs.append(float(r) ** (-gamma))
            bounds.append(bounds[-1] + w.size)
        self.nc = len(monomial_basis(G.k, G.n))
        self.samples = bool(gvs)
        if not self.samples:
            return
        self.gv = np.concatenate(gvs)
        self.V = np.vstack(Vs)
        self.w = np.concatenate(ws)
        self.pref = np.asarray(prefs)
        self.offsets = np.asarray(bounds[:-1])
        self.q = q

    def __call__(self, coef: np.ndarray) -> float:
        d = self.w * np.abs(self.gv - self.V @ coef) ** self.q
        sums = np.add.reduceat(d, self.offsets)
        return float((self.pref * sums ** (1.0 / self.q)).max())


def calderon_maximal(G: PolyClass, q: float, gamma: float, z: np.ndarray,
                     cfg: SolverConfig | None = None,
                     n_starts: int = 3, iters: int = 60, seed: int = 0) -> tuple:
    """N_{q,gamma}(G; z) = inf over representatives of eta(g - p; z).

    The objective is convex in the P_k coefficients (sup of seminorms), so
    cyclic coordinate descent with golden-section line searches and a few
    starts converges; returns (value, coefficients, converged flag).
    """
    cfg = cfg or SolverConfig()
    obj = _EtaObjective(G, q, gamma, np.asarray(z, dtype=float), cfg)
    if not obj.samples:
        return 0.0, np.zeros(obj.nc), True
    rng = np.random.default_rng(seed)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    scale0 = max(1.0, float(np.abs(obj.gv).max(initial=0.0)))
    # least-squares fit on the tightest ball: near-osculating representative
    k0 = int(np.argmax(obj.pref))
    lo_i = obj.offsets[k0]
    hi_i = obj.offsets[k0 + 1] if k0 + 1 < obj.offsets.size else obj.gv.size
    Vs, gs, ws = obj.V[lo_i:hi_i], obj.gv[lo_i:hi_i], obj.w[lo_i:hi_i]
    smart, *_ = np.linalg.lstsq(Vs * np.sqrt(ws)[:, None], gs * np.sqrt(ws), rcond=None)

    def line_min(coef, axis, lo, hi, tol=1e-10):
        c, d = hi - inv_phi * (hi - lo), lo + inv_phi * (hi - lo)
        e1 = np.array(coef); e1[axis] = c
        e2 = np.array(coef); e2[axis] = d
        f1, f2 = obj(e1), obj(e2)
        while hi - lo > tol * (1.0 + abs(lo) + abs(hi)):
            if f1 < f2:
                hi, d, f2 = d, c, f1
                c = hi - inv_phi * (hi - lo)
                e1 = np.array(coef); e1[axis] = c
                f1 = obj(e1)
            else:
                lo, c, f1 = c, d, f2
                d = lo + inv_phi * (hi - lo)
                e2 = np.array(coef); e2[axis] = d
                f2 = obj(e2)
        return 0.5 * (lo + hi)

    scale = scale0
    best_val, best_coef = np.inf, np.zeros(obj.nc)
    converged = False
    starts = [smart, np.zeros(obj.nc)]
    starts += [smart + rng.normal(scale=0.05 * scale, size=obj.nc)
               for _ in range(max(0, n_starts - 2))]
    from scipy.optimize import minimize

    for coef0 in starts:
        coef = np.array(coef0, dtype=float)
        prev = obj(coef)
        for it in range(iters):
            for axis in range(obj.nc):
                width = max(scale, 1.0) * (0.5 ** min(it, 30) + 1e-12)
                coef[axis] = line_min(coef, axis, coef[axis] - width, coef[axis] + width)
            cur = obj(coef)
            if prev - cur <= 1e-12 * max(prev, 1.0):
                break
            prev = cur
        # the objective is a max of smooth pieces; polish across the kinks
        res = minimize(obj, coef, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 800})
        val = float(res.fun)
        if val < best_val:
            best_val, best_coef, converged = val, np.asarray(res.x), bool(res.success)
    return float(best_val), best_coef, converged


def calderon_norm_field(G: PolyClass, q: float, gamma: float, eval_grid: GridFunction,
                        cfg: SolverConfig | None = None) -> GridFunction:
    """N_{q,gamma}(G; .) sampled on a (coarse) evaluation grid."""
    cfg = cfg or SolverConfig()
    pts = eval_grid.flat_points()
    out = np.empty(pts.shape[0])
    for i, z in enumerate(pts):
        out[i] = calderon_maximal(G, q, gamma, z, cfg)[0]
    return eval_grid.with_values(out.reshape(eval_grid.resolution))


def calderon_hardy_norm(G: PolyClass, phi: OrliczSpec, q: float, gamma: float,
                        eval_grid: GridFunction, cfg: SolverConfig | None = None) -> float:
    """||G|| = Luxemburg norm of the N_{q,gamma} field on the evaluation grid."""
    return luxemburg_norm(calderon_norm_field(G, q, gamma, eval_grid, cfg), phi)


# ---------------------------------------------------------------------------
# pointwise estimate and divergence demonstration
# ---------------------------------------------------------------------------

def pointwise_estimate_check(a: Atom, sample_points: np.ndarray,
                             cfg: SolverConfig | None = None,
                             mx_cfg: MaximalConfig | None = None,
                             out_grid: GridFunction | None = None) -> dict:
    """Empirical constant in the N-estimate for potentials of atoms.

    Evaluates N_{q,2}(class of b; z) against
    ||chi_B||^{-1} (M chi_B)^{(2+Q/q)/Q} + chi_{4 beta^2 B} (M a + sum T*_I a)
    at the sample points and records the worst ratio.
    """
    cfg = cfg or SolverConfig()
    cfg.validate(a.n)
    g = a.samples
    mx_cfg = mx_cfg or MaximalConfig(boundary="zero")
    Q = GroupConfig(a.n).Q
    target = out_grid if out_grid is not None else g
    b = potential(a, out=target, cfg=cfg)
    G = PolyClass(b, k=cfg.k_order, n=a.n)

    from .orlicz import indicator_norm

    chi = GridFunction.from_callable(
        lambda p: a.ball.contains(p).astype(float), target.box, target.resolution)
    m_chi = hl_maximal_field(chi, mx_cfg)
    a_on_target = GridFunction.from_callable(
        lambda p: g.interp(p, mode="constant"), target.box, target.resolution)
    m_a = hl_maximal_field(a_on_target, mx_cfg)
    chi_norm = indicator_norm(ball_volume(a.ball.radius, a.n), a.phi)
    big_ball = a.ball.dilated(4.0 * cfg.beta ** 2)

    pts = np.asarray(sample_points, dtype=float).reshape(-1, 2 * a.n + 1)
    exponent = (2.0 + Q / cfg.q) / Q
    worst = 0.0
    rows = []
    tstar_fields = degree2_indices(a.n)
    tstar_vals = {I: truncated_singular_sup(I, a, pts, cfg=cfg) for I in tstar_fields}
    for i, z in enumerate(pts):
        lhs = calderon_maximal(G, cfg.q, 2.0, z, cfg)[0]
        rhs = (1.0 / chi_norm) * float(m_chi.interp(z[None, :], mode="nearest")[0]) ** exponent
        if bool(big_ball.contains(z)):
            rhs += float(m_a.interp(z[None, :], mode="nearest")[0])
            rhs += sum(float(tstar_vals[I][i]) for I in tstar_fields)
        ratio = lhs / rhs if rhs > 0 else math.inf
        rows.append({"z": [float(v) for v in z], "lhs": lhs, "rhs": rhs, "ratio": ratio})
        worst = max(worst, ratio)
    return {"empirical_constant": worst, "rows": rows,
            "config": {"q": cfg.q, "beta": cfg.beta}}


def t_coordinate_class(n: int = 1, k: int = 1) -> PolyClass:
    """The class of g(z) = t in E^q_k (an analytic representative)."""
    return PolyClass(lambda pts: np.asarray(pts, dtype=float)[..., -1], k=k, n=n)


def truncated_modular_growth(phi: OrliczSpec, q: float, base_radius: float = 1.0,
                             doublings: int = 3, samples_per_shell: int = 160,
                             seed: int = 0, cfg: SolverConfig | None = None) -> dict:
    """Truncated modulars int_{rho<R} Phi(N_{q,2}(G;z)) dz for R = R0 * 2^k.

    G is the class of g(z) = t; the N-field is dilation-invariant along rays,
    so the modular grows like the volume and witnesses the divergence that
    collapses the space when I(Phi) is sub-critical.
    """
    cfg = cfg or SolverConfig(q=q, eta_radii=tuple(2.0 ** np.arange(-3.0, 4.0)))
    cfg.validate(1)
    rng = np.random.default_rng(seed)
    G = t_coordinate_class(1)
    radii = [base_radius * 2.0 ** k for k in range(doublings + 1)]
    modulars = []
    for R in radii:
        # seeded rejection sample of the truncation ball rho < R
        pts = []
        while len(pts) < samples_per_shell:
            cand = rng.uniform(-1.0, 1.0, size=(2 * samples_per_shell, 3))
            cand *= np.array([R, R, R * R])
            keep = koranyi_norm(cand) < R
            pts.extend(cand[keep])
        pts = np.asarray(pts[:samples_per_shell])
        nvals = np.array([calderon_maximal(G, q, 2.0, z, cfg)[0] for z in pts])
        modulars.append(float(phi.evaluate(nvals).mean()) * ball_volume(R, 1))
    return {
        "radii": radii,
        "modulars": modulars,
        "strictly_increasing": bool(all(b > a for a, b in zip(modulars, modulars[1:]))),
        "config": {"q": q, "phi": phi.to_json(),
                   "samples_per_shell": samples_per_shell},
    }

"""Constructive atomic decomposition and the Poisson solver.

Pipeline: level sets of the grand maximal function, Whitney covers with
disjoint quarter-balls, smooth partitions of unity, weighted moment
projections, telescoped local pieces h_{j,k} normalized into sup-atoms with
lambda_{j,k} = C 2^j ||chi_{T2 B_{j,k}}||_Phi, and F assembled through the
fundamental-solution potential.

Desk-scale policies (all surfaced in the diagnostics):
  * the complement of a level set includes the region outside the grid box;
  * ball radii are dist/(2 T2), so covers built with the classical constants
    (T1, T2, T3) = (9, 18, 54) are valid but almost entirely sub-cell at
    feasible resolutions - the solver defaults to a smaller constant triple
    with the same ratios so that the ladder does real work;
  * the finite j-window is closed by one "tail atom" carrying the remaining
    good part (its moments vanish exactly when the input's do), which makes
    the reconstruction exact to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .atoms import Atom, critical_moment_order, validate_atom
from .calculus import monomial_basis, monomial_matrix, monomial_values
from .grid import Box, GridFunction, aligned_subwindow
from .group import GroupConfig, KoranyiBall, ball_volume, inverse, koranyi_norm, multiply
from .maximal import MaximalConfig, default_dictionary, grand_maximal
from .orlicz import OrliczSpec, indicator_norm, luxemburg_norm
from .potential import PolyClass, SolverConfig, calderon_hardy_norm, potential


# ---------------------------------------------------------------------------
# Whitney machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WhitneyConstants:
    """The dilation triple (T1, T2, T3) with T2 = 2 gamma^2 T1, T3 = 3 gamma T2."""

    t1: float = 9.0
    t2: float = 18.0
    t3: float = 54.0

    def __post_init__(self):
        if self.t2 < 2.0:
            raise ValueError("T2 >= 2 is required (partition bumps live on 2B)")
        if not self.t1 <= self.t2 <= self.t3:
            raise ValueError("need T1 <= T2 <= T3")

    @classmethod
    def from_params(cls, gamma: float = 1.0, beta: float = 1.0, N: int = 7) -> "WhitneyConstants":
        t1 = 9.0 * gamma * beta ** N
        t2 = 2.0 * gamma ** 2 * t1
        return cls(t1, t2, 3.0 * gamma * t2)

    @classmethod
    def desk_scale(cls, t1: float = 1.25) -> "WhitneyConstants":
        """Same ratio structure with a small T1; see module docstring.

        Inter-level pieces are emitted on the dilates of their own balls, so
        no containment constraint forces T2 upward and (1.25, 2.5, 7.5) keeps
        balls as large as the distance budget allows.
        """
        return cls(t1, 2.0 * t1, 6.0 * t1)


@dataclass
class WhitneyCover:
    """Selected centers/radii covering an open grid set."""

    centers: np.ndarray
    radii: np.ndarray
    constants: WhitneyConstants
    overlap: int | None = None

    def __len__(self) -> int:
        return int(self.centers.shape[0])


def level_sets(mx: GridFunction, js) -> list:
    """O_j = {M_N f > 2^j} as boolean cell masks (nested decreasing in j)."""
    return [(mx.values > 2.0 ** j) for j in js]


def _face_distance(pts: np.ndarray, box: Box) -> np.ndarray:
    """rho-distance from each point to the region outside the box.

    Exact for the x-faces (rho >= |dx| with equality attainable); for the
    t-faces the 1-d reduction over the shear is minimized on a grid, giving
    a slight underestimate (safe: radii only shrink).
    """
    pts = np.asarray(pts, dtype=float)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    d = np.inf * np.ones(pts.shape[0])
    for a in range(pts.shape[1] - 1):
        d = np.minimum(d, pts[:, a] - lo[a])
        d = np.minimum(d, hi[a] - pts[:, a])
    dT = np.minimum(pts[:, -1] - lo[-1], hi[-1] - pts[:, -1])
    xnorm = np.linalg.norm(pts[:, :-1], axis=1)
    # min over s >= 0 of (s^4 + max(0, dT - 2 |x| s)^2)^{1/4}
    s_hi = np.sqrt(np.maximum(dT, 0.0))
    grid = np.linspace(0.0, 1.0, 25)[None, :]
    s = s_hi[:, None] * grid
    val = (s ** 4 + np.maximum(dT[:, None] - 2.0 * xnorm[:, None] * s, 0.0) ** 2) ** 0.25
    d_t = val.min(axis=1)
    return np.minimum(d, np.maximum(d_t, 0.0))


def complement_distance(mask: np.ndarray, grid: GridFunction,
                        allow_exterior: bool = True) -> np.ndarray:
    """rho-distance from every cell of O to the complement (cells + exterior).

    Returns +inf off O.  The in-box complement enters through its cell
    centers; the exterior region through the exact face reduction.
    """
    pts = grid.flat_points()
    flat = mask.reshape(-1)
    if not flat.any():
        return np.full(flat.shape, np.inf).reshape(mask.shape)
    opts = pts[flat]
    d = np.full(opts.shape[0], np.inf)
    comp = pts[~flat]
    if comp.shape[0]:
        order = np.argsort(comp[:, 0], kind="stable")
        d = _kernels.min_group_distance(opts, np.ascontiguousarray(comp[order]))
    if allow_exterior:
        d = np.minimum(d, _face_distance(opts, grid.box))
    out = np.full(flat.shape, np.inf)
    out[flat] = d
    return out.reshape(mask.shape)


def whitney_cover(mask: np.ndarray, grid: GridFunction,
                  constants: WhitneyConstants | None = None,
                  allow_exterior: bool = False) -> WhitneyCover:
    """Greedy Whitney cover of an open grid set.

    Candidate balls B(z, dist(z, O^c)/(2 T2)) at every cell of O, processed
    by decreasing radius keeping those with pairwise-disjoint quarter balls.
    The kept family covers O (standard Vitali argument with gamma = 1).
    """
    constants = constants or WhitneyConstants()
    flat = mask.reshape(-1)
    if not flat.any():
        return WhitneyCover(np.zeros((0, grid.dim)), np.zeros(0), constants)
    if not allow_exterior and not (~flat).any():
        raise ValueError("open set fills the whole box and the exterior is excluded")
    d = complement_distance(mask, grid, allow_exterior=allow_exterior).reshape(-1)[flat]
    if not np.all(np.isfinite(d)):
        raise ValueError("complement is empty; no Whitney cover exists")
    pts = grid.flat_points()[flat]
    radii = d / (2.0 * constants.t2)
    order = np.argsort(-radii, kind="stable")
    bucket = max(float(radii.max()) / 2.0, float(grid.spacing[:-1].max()))
    bx_lo = float(grid.box.lo[0])
    by_lo = float(grid.box.lo[1])
    nbx = int(np.ceil(grid.box.widths()[0] / bucket)) + 1
    nby = int(np.ceil(grid.box.widths()[1] / bucket)) + 1
    keep = _kernels.greedy_disjoint_hashed(pts, radii, order, 0.25,
                                           bucket, bx_lo, by_lo, nbx, nby)
    return WhitneyCover(pts[keep], radii[keep], constants)


def verify_cover(cover: WhitneyCover, mask: np.ndarray, grid: GridFunction,
                 allow_exterior: bool = False) -> dict:
    """Exact grid assertions for (w1)-(w4); records the overlap bound L."""
    flat = mask.reshape(-1)
    pts = grid.flat_points()
    opts = pts[flat]
    c = cover.constants
    centers = np.ascontiguousarray(cover.centers)
    radii = np.ascontiguousarray(cover.radii)

    w1 = bool(np.all(_kernels.covered_by_balls(opts, centers, radii))) if len(cover) else not flat.any()
    w2 = bool(_kernels.pairwise_disjoint(centers, radii, 0.25)) if len(cover) else True

    comp = np.ascontiguousarray(pts[~flat])
    inside_ok = True
    meets_ok = True
    if len(cover):
        if comp.shape[0]:
            order = np.argsort(comp[:, 0], kind="stable")
            d_comp = _kernels.min_group_distance(centers, np.ascontiguousarray(comp[order]))
        else:
            d_comp = np.full(len(cover), np.inf)
        d_reg = d_comp
        if allow_exterior:
            d_reg = np.minimum(d_comp, _face_distance(centers, grid.box))
        inside_ok = bool(np.all(d_reg >= c.t2 * radii))
        meets_ok = bool(np.all(d_reg <= c.t3 * radii))
    if len(cover):
        counts = _kernels.count_ball_membership(opts, centers, c.t2 * radii)
        L = int(counts.max(initial=0))
    else:
        L = 0
    report = {
        "w1_covers": w1,
        "w2_quarter_disjoint": w2,
        "w3_inside": inside_ok,
        "w3_meets_complement": meets_ok,
        "w4_overlap": L,
        "balls": len(cover),
        "pass": bool(w1 and w2 and inside_ok and meets_ok),
    }
    cover.overlap = L
    return report


# ---------------------------------------------------------------------------
# atomic decomposition
# ---------------------------------------------------------------------------

@dataclass
class DecompositionConfig:
    """Knobs for the finite-window decomposition.

    The seminorm order N and the dictionary are exposed because "N large
    enough" is an open choice: the solver default N = 2 with wide members
    keeps the measured ladder constants O(1) at desk scale (see notes).
    """

    maximal: MaximalConfig = field(default_factory=lambda: MaximalConfig(
        boundary="zero", N=2, j_range=(-3, 6)))
    constants: WhitneyConstants = field(default_factory=WhitneyConstants.desk_scale)
    dictionary: list | None = None
    dictionary_radius: float = 3.0
    num_levels: int = 12
    bump_power: int = 4
    bump_support: float = 1.05  # partition bumps live on (bump_support) * B
    max_processed_per_level: int = 600  # largest-radius balls get the projections
    lambda_policy: str = "uniform"  # "uniform": lambda = C_run 2^j ||chi||;
    # "saturated": lambda = ||h||_inf ||chi|| (smallest valid sup-atom weight;
    # desk-scale: resolvable balls sit deep inside their level sets, so the
    # per-piece sup constants span decades and a single C inflates the
    # atomic-norm functional by that span)
    drop_tol: float = 1e-12
    tail: str = "atom"  # "atom" | "discard"
    verify_covers: bool = False
    max_atoms: int = 200_000

    def get_dictionary(self, n: int) -> list:
        from .maximal import solver_dictionary

        if self.dictionary is not None:
            return self.dictionary
        return solver_dictionary(n, self.maximal.N, self.dictionary_radius)


@dataclass
class AtomicEntry:
    lam: float
    atom: Atom
    level: int | None = None
    index: int | None = None
    kind: str = "level"


@dataclass
class AtomicDecomposition:
    entries: list
    c_run: float
    levels: list
    residual_l2: float
    residual_without_tail: float
    tail_moment_defect: float
    config: DecompositionConfig

    def __len__(self) -> int:
        return len(self.entries)

    def reconstruct(self, grid: GridFunction) -> GridFunction:
        out = np.zeros(grid.resolution)
        h = grid.spacing
        lo = np.asarray(grid.box.lo)
        for e in self.entries:
            sub = e.atom.samples
            off = np.rint((np.asarray(sub.box.lo) - lo) / h).astype(int)
            sl = tuple(slice(o, o + s) for o, s in zip(off, sub.resolution))
            out[sl] += e.lam * sub.values
        return grid.with_values(out)

    def manifest(self) -> list:
        from .atoms import atom_to_manifest

        rows = []
        for e in self.entries:
            row = {"j": e.level, "k": e.index, "lambda": e.lam, "kind": e.kind}
            row.update(atom_to_manifest(e.atom))
            rows.append(row)
        return rows


def _ball_cells(grid: GridFunction, center: np.ndarray, radius: float) -> tuple:
    """Flat indices + points of cell centers inside B(center, radius)."""
    lo = np.asarray(grid.box.lo)
    h = grid.spacing
    res = grid.resolution
    c = np.asarray(center, dtype=float)
    i_lo = np.maximum(0, np.floor((c[:-1] - radius - lo[:-1]) / h[:-1] - 0.5).astype(int))
    i_hi = np.minimum(np.array(res[:-1]) - 1,
                      np.ceil((c[:-1] + radius - lo[:-1]) / h[:-1] - 0.5).astype(int))
    t_half = radius ** 2 + 2.0 * radius * float(np.linalg.norm(c[:-1]))
    j_lo = max(0, int(np.floor((c[-1] - t_half - lo[-1]) / h[-1] - 0.5)))
    j_hi = min(res[-1] - 1, int(np.ceil((c[-1] + t_half - lo[-1]) / h[-1] - 0.5)))
    if np.any(i_hi < i_lo) or j_hi < j_lo:
        return np.zeros(0, dtype=int), np.zeros((0, grid.dim))
    axes = [lo[a] + (np.arange(i_lo[a], i_hi[a] + 1) + 0.5) * h[a] for a in range(grid.dim - 1)]
    axes.append(lo[-1] + (np.arange(j_lo, j_hi + 1) + 0.5) * h[-1])
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1).reshape(-1, grid.dim)
    rel = multiply(inverse(c), pts)
    inside = koranyi_norm(rel) < radius
    idx_axes = [np.arange(i_lo[a], i_hi[a] + 1) for a in range(grid.dim - 1)]
    idx_axes.append(np.arange(j_lo, j_hi + 1))
    idx_mesh = np.meshgrid(*idx_axes, indexing="ij")
    flat = np.ravel_multi_index([m.reshape(-1) for m in idx_mesh], res)
    return flat[inside], pts[inside]


def _bump(center, radius, pts, power) -> np.ndarray:
    rel = multiply(inverse(np.asarray(center, dtype=float)), np.asarray(pts, dtype=float))
    rho = koranyi_norm(rel)
    v = (rho / radius) ** 4
    return np.where(v < 1.0, (1.0 - np.minimum(v, 1.0)) ** power, 0.0)


def _weighted_projection(vals, weights, pts, m, n, center, scale) -> tuple:
    """argmin_c || sqrt(w) (vals - V c) ||; returns (residual, coefficients)."""
    V = monomial_matrix(pts, m, n, center=center, scale=scale)
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(V * sw[:, None], vals * sw, rcond=None)
    return vals - V @ coef, coef


def atomic_decompose(f: GridFunction, phi: OrliczSpec, m: int | None = None,
                     N: int | None = None,
                     cfg: DecompositionConfig | None = None,
                     mx: GridFunction | None = None) -> AtomicDecomposition:
    """Finite-window atomic decomposition of a compactly supported grid function.

    Returns sup-normalized atoms with weights lambda_{j,k} = C 2^j
    ||chi_{T2 B_{j,k}}||_Phi (C measured from the pieces actually produced)
    plus, by default, one closing tail atom so that sum(lambda a) reproduces
    f to rounding.
    """
    cfg = cfg or DecompositionConfig()
    n = f.n
    m_min = critical_moment_order(phi, n)
    if m is None:
        m = m_min
    if m < m_min:
        raise ValueError(f"moment order {m} below the critical order {m_min}")
    N = N if N is not None else cfg.maximal.N
    if mx is None:
        mx = grand_maximal(f, N, cfg.get_dictionary(n), cfg.maximal)
    mmax = float(mx.values.max())
    if mmax <= 0.0:
        return AtomicDecomposition([], 0.0, [], 0.0, 0.0, 0.0, cfg)
    j_hi = int(math.ceil(math.log2(mmax)))
    js = list(range(j_hi - 1, j_hi - 1 - cfg.num_levels, -1))
    masks = {j: (mx.values > 2.0 ** j) for j in js}

    nbasis = len(monomial_basis(m, n))
    pts_all = f.flat_points()
    fvals = f.values.reshape(-1)
    lo = np.asarray(f.box.lo)
    h = f.spacing
    shape = np.asarray(f.resolution)

    prev_balls = []  # processed balls of level j+1: dicts with cells, pts, zeta, resid
    raw_pieces = []  # (j, k, ball_T2, cell_idx dict -> h values)
    level_stats = []

    for j in js:
        mask = masks[j]
        stats = {"j": j, "balls": 0, "processed": 0, "atoms": 0}
        if not mask.any():
            prev_balls = []
            level_stats.append(stats)
            continue
        cover = whitney_cover(mask, f, cfg.constants, allow_exterior=True)
        if cfg.verify_covers:
            stats["cover"] = verify_cover(cover, mask, f, allow_exterior=True)
        stats["balls"] = len(cover)
        centers = cover.centers
        radii = cover.radii
        # partition denominators from every bump; counts prune sub-basis balls
        S, counts = _kernels.accumulate_bumps(centers, cfg.bump_support * radii, lo, h,
                                              shape, cfg.bump_power)
        S_flat = S.reshape(-1)
        balls = []
        order = np.argsort(-radii, kind="stable")
        for k in order:
            if counts[k] <= nbasis:
                continue  # projection interpolates: the bad part vanishes identically
            if len(balls) >= cfg.max_processed_per_level:
                break  # remaining (smaller) balls stay in the good part / tail
            cells, cpts = _ball_cells(f, centers[k], cfg.bump_support * radii[k])
            if cells.size <= nbasis:
                continue
            zeta = _bump(centers[k], cfg.bump_support * radii[k], cpts,
                         cfg.bump_power) / S_flat[cells]
            resid, _ = _weighted_projection(fvals[cells], zeta, cpts, m, n,
                                            centers[k], cfg.bump_support * radii[k])
            bk = resid * zeta
            if float(np.abs(bk).max(initial=0.0)) <= cfg.drop_tol * max(1e-300, float(np.abs(fvals).max())):
                continue
            balls.append({"k": int(k), "center": centers[k], "radius": float(radii[k]),
                          "cells": cells, "pts": cpts, "zeta": zeta, "resid": resid})
        stats["processed"] = len(balls)
        # spatial index over the previous level for the bracket pair scan
        if prev_balls:
            prev_x1 = np.array([b["center"][0] for b in prev_balls])
            prev_r = np.array([b["radius"] for b in prev_balls])
            prev_sort = np.argsort(prev_x1, kind="stable")
            prev_x1_sorted = prev_x1[prev_sort]
            prev_rmax = float(prev_r.max())

        # h_{j,k} = b_{j,k} - sum_l [ zeta_{j,k} b_{j+1,l} - P_{j,k,l} zeta_{j+1,l} ].
        # The own-ball part lives on (bump_support) B_{j,k} c T2 B_{j,k}.  The
        # inter-level brackets are accumulated per NEXT-LEVEL ball l and
        # emitted as one level-j piece on T2 B_{j+1,l} (their natural support),
        # which frees T2 from the containment constraint big next-level balls
        # would impose while keeping the piece multiplicity per point bounded.
        merged_brackets = [None] * len(prev_balls)
        for ball in balls:
            hmap = {}
            cells = ball["cells"]
            bk = ball["resid"] * ball["zeta"]
            for idx, val in zip(cells, bk):
                hmap[int(idx)] = hmap.get(int(idx), 0.0) + float(val)
            if hmap:
                raw_pieces.append((j, ball["k"],
                                   KoranyiBall(tuple(ball["center"]),
                                               cfg.constants.t2 * ball["radius"]),
                                   hmap))
            if prev_balls:
                # bumps can only meet when |dx1| < u (r_k + r_l)
                reach = cfg.bump_support * (ball["radius"] + prev_rmax)
                lo_i = np.searchsorted(prev_x1_sorted, ball["center"][0] - reach)
                hi_i = np.searchsorted(prev_x1_sorted, ball["center"][0] + reach)
                candidates = prev_sort[lo_i:hi_i]
            else:
                candidates = []
            for li in candidates:
                lball = prev_balls[li]
                zjk = _bump(ball["center"], cfg.bump_support * ball["radius"], lball["pts"],
                            cfg.bump_power) / S_flat[lball["cells"]]
                u = zjk * lball["resid"]
                if not np.any(u != 0.0):
                    continue
                bracket_resid, _ = _weighted_projection(u, lball["zeta"], lball["pts"],
                                                        m, n, lball["center"],
                                                        cfg.bump_support * lball["radius"])
                bracket = bracket_resid * lball["zeta"]
                if merged_brackets[li] is None:
                    merged_brackets[li] = np.zeros(lball["cells"].size)
                merged_brackets[li] -= bracket
        for li, acc in enumerate(merged_brackets):
            if acc is None or not np.any(acc != 0.0):
                continue
            lball = prev_balls[li]
            bmap = {int(idx): float(val) for idx, val in zip(lball["cells"], acc) if val != 0.0}
            if bmap:
                raw_pieces.append((j, lball["k"],
                                   KoranyiBall(tuple(lball["center"]),
                                               cfg.constants.t2 * lball["radius"]),
                                   bmap))
        if len(raw_pieces) > cfg.max_atoms:
            raise RuntimeError("atom budget exceeded; shrink the level window")
        prev_balls = balls
        stats["atoms"] = sum(1 for p in raw_pieces if p[0] == j)
        level_stats.append(stats)

    # the measured sup-norm constant of the produced pieces
    c_run = 0.0
    for j, k, ballT2, hmap in raw_pieces:
        hsup = max(abs(v) for v in hmap.values())
        c_run = max(c_run, hsup / 2.0 ** j)
    entries = []
    for j, k, ballT2, hmap in raw_pieces:
        chi = indicator_norm(ball_volume(ballT2.radius, n), phi)
        if cfg.lambda_policy == "saturated":
            lam = max(abs(v) for v in hmap.values()) * chi
        else:
            lam = c_run * 2.0 ** j * chi
        if lam <= 0.0:
            continue
        idx = np.fromiter(hmap.keys(), dtype=int)
        vals = np.fromiter(hmap.values(), dtype=float) / lam
        if not np.any(vals != 0.0):
            continue
        ijk = np.stack(np.unravel_index(idx, f.resolution), axis=-1)
        lo_idx = ijk.min(axis=0)
        hi_idx = ijk.max(axis=0) + 1
        sub = aligned_subwindow(f, lo_idx, hi_idx)
        sub.values[:] = 0.0
        local = np.ravel_multi_index((ijk - lo_idx).T, sub.resolution)
        sub.values.reshape(-1)[local] = vals
        entries.append(AtomicEntry(lam, Atom(sub, ballT2, phi, math.inf, m), j, k))

    # tail: the good part of the lowest level
    tail_defect = 0.0
    recon = np.zeros(fvals.shape)
    for e in entries:
        off = np.rint((np.asarray(e.atom.samples.box.lo) - lo) / h).astype(int)
        sl = tuple(slice(o, o + s) for o, s in zip(off, e.atom.samples.resolution))
        view = recon.reshape(f.resolution)
        view[sl] += e.lam * e.atom.samples.values
    g_tail = fvals - recon
    fnorm = math.sqrt(float((fvals ** 2).sum()) * f.cell_volume)
    res_no_tail = math.sqrt(float((g_tail ** 2).sum()) * f.cell_volume) / max(fnorm, 1e-300)
    if cfg.tail == "atom" and np.any(g_tail != 0.0):
        support = np.abs(g_tail) > 0.0
        spts = pts_all[support]
        center = np.zeros(f.dim)
        rad = float(koranyi_norm(multiply(inverse(center), spts)).max()) * 1.05 + float(h.max())
        sup = float(np.abs(g_tail).max())
        tail_ball = KoranyiBall(tuple(center), rad)
        lam_tail = sup * indicator_norm(ball_volume(rad, n), phi)
        tail_vals = (g_tail / lam_tail).reshape(f.resolution)
        tail_atom = Atom(GridFunction(f.box, tail_vals), tail_ball, phi, math.inf, m)
        entries.append(AtomicEntry(lam_tail, tail_atom, None, None, "tail"))
        cell = f.cell_volume
        base = max(sup, 1e-300) * ball_volume(rad, n)
        for I in monomial_basis(m, n):
            mom = float((g_tail * monomial_values(pts_all, I)).sum() * cell)
            tail_defect = max(tail_defect, abs(mom) / base)
        residual = 0.0
    else:
        residual = res_no_tail

    return AtomicDecomposition(entries, c_run, level_stats, residual, res_no_tail,
                               tail_defect, cfg)


# ---------------------------------------------------------------------------
# atomic norm functional and related checks
# ---------------------------------------------------------------------------

def atomic_norm_functional(entries: list, phi: OrliczSpec, theta: float,
                           grid: GridFunction) -> float:
    """|| { sum_j (lambda_j chi_{B_j} / ||chi_{B_j}||_Phi)^theta }^{1/theta} ||_Phi."""
    if not entries:
        return 0.0
    centers = np.array([e.atom.ball.center for e in entries])
    radii = np.array([e.atom.ball.radius for e in entries])
    amounts = np.array([
        (e.lam / indicator_norm(ball_volume(e.atom.ball.radius, grid.n), phi)) ** theta
        for e in entries])
    acc = _kernels.paint_balls(centers, radii, amounts, np.asarray(grid.box.lo),
                               grid.spacing, np.asarray(grid.resolution))
    return luxemburg_norm(grid.with_values(acc ** (1.0 / theta)), phi)


def max_on_atoms_check(atoms: list, ks: np.ndarray, r: float, phi: OrliczSpec,
                       theta: float, grid: GridFunction,
                       mx_cfg: MaximalConfig | None = None) -> dict:
    """Empirical constant in the maximal-on-atoms inequality.

    lhs = || sum_j k_j chi_{r B_j} M a_j ||_Phi against the theta-aggregated
    rhs; the constant is recorded, not asserted at a theory value.
    """
    from .maximal import hl_maximal_field

    mx_cfg = mx_cfg or MaximalConfig(boundary="zero")
    acc = np.zeros(grid.resolution)
    for kj, a in zip(ks, atoms):
        resampled = GridFunction.from_callable(
            lambda p: a.samples.interp(p, mode="constant"), grid.box, grid.resolution)
        ma = hl_maximal_field(resampled, mx_cfg)
        chi = a.ball.dilated(r).contains(grid.points()).astype(float)
        acc += kj * chi * ma.values
    lhs = luxemburg_norm(grid.with_values(acc), phi)
    entries = [AtomicEntry(float(kj), a) for kj, a in zip(ks, atoms)]
    rhs = atomic_norm_functional(entries, phi, theta, grid)
    return {"lhs": lhs, "rhs": rhs,
            "ratio": lhs / rhs if rhs > 0 else math.inf,
            "config": {"r": r, "theta": theta, "phi": phi.to_json()}}


# ---------------------------------------------------------------------------
# end-to-end solver
# ---------------------------------------------------------------------------

class ParameterError(ValueError):
    """Raised when the solver preconditions fail; names the inequality."""


def check_solver_preconditions(phi: OrliczSpec, q: float, n: int = 1) -> None:
    Q = GroupConfig(n).Q
    if not 1.0 < q < (n + 1) / n:
        raise ParameterError(f"1 < q < (n+1)/n violated: q = {q}")
    crit = Q / (2.0 + Q / q)
    if not phi.lower_index > crit:
        raise ParameterError(
            f"Q(2 + Q/q)^-1 < i(Phi) violated: {crit:.6f} >= {phi.lower_index}")
    if not math.isfinite(phi.upper_index):
        raise ParameterError("I(Phi) < infinity violated")


def default_battery(n: int = 1) -> list:
    """Compactly supported pairing tests (field, L-field, shift)."""
    from .calculus import radial_poly_bump, sublaplacian_field

    specs = [
        (1.5, 4, (0.0, 0.0, 0.0)),
        (1.8, 4, (0.4, 0.0, 0.0)),
        (1.6, 5, (0.0, -0.4, 0.2)),
        (2.2, 4, (0.0, 0.0, -0.5)),
        (1.7, 6, (-0.3, 0.3, 0.0)),
    ]
    out = []
    for radius, power, shift in specs:
        bump = radial_poly_bump(n, radius, power)
        out.append((bump, sublaplacian_field(bump), np.asarray(shift)))
    return out


def weak_residual_report(F: GridFunction, f: GridFunction,
                         battery: list | None = None) -> dict:
    """| <F, L phi> - <f, phi> | over the battery, relative to |<f, phi>|.

    Shifted tests phi(z) = phi0(z0^{-1} z) use left invariance:
    (L phi)(z) = (L phi0)(z0^{-1} z).
    """
    battery = battery or default_battery(f.n)
    pts = f.flat_points()
    cell = f.cell_volume
    rows = []
    worst = 0.0
    for phi0, Lphi0, shift in battery:
        rel = multiply(inverse(np.asarray(shift, dtype=float)), pts)
        pair_f = float((f.values.reshape(-1) * phi0(rel)).sum() * cell)
        pair_F = float((F.values.reshape(-1) * Lphi0(rel)).sum() * cell)
        denom = abs(pair_f)
        rel_err = abs(pair_F - pair_f) / denom if denom > 0 else math.inf
        rows.append({"shift": [float(v) for v in shift], "lhs": pair_F,
                     "rhs": pair_f, "relative_error": rel_err})
        worst = max(worst, rel_err)
    return {"worst": worst, "rows": rows}


def solve_poisson(f: GridFunction, phi: OrliczSpec, q: float, m: int | None = None,
                  cfg: DecompositionConfig | None = None,
                  solver_cfg: SolverConfig | None = None,
                  eval_resolution: int = 6,
                  battery: list | None = None) -> tuple:
    """Solve L F = f through the atomic route; returns (F, diagnostics).

    F = sum lambda_{j,k} (a_{j,k} * c_n rho^{-2n}), evaluated as the potential
    of the reconstructed atomic sum (the potential is linear, a property the
    test suite checks independently).
    """
    cfg = cfg or DecompositionConfig()
    solver_cfg = solver_cfg or SolverConfig(q=q)
    check_solver_preconditions(phi, q, f.n)
    if float(np.abs(f.values).max(initial=0.0)) == 0.0:
        F = f.with_values(np.zeros(f.resolution))
        return F, {"zero_input": True, "weak_residual": {"worst": 0.0, "rows": []},
                   "decomposition": {"atoms": 0}}
    decomp = atomic_decompose(f, phi, m=m, cfg=cfg)
    recon = decomp.reconstruct(f)
    # drop rounding dust so the singular convolution only visits real support
    sup = float(np.abs(recon.values).max(initial=0.0))
    recon_src = recon.with_values(
        np.where(np.abs(recon.values) > 1e-13 * sup, recon.values, 0.0))
    F = potential(recon_src, cfg=solver_cfg)

    wr = weak_residual_report(F, f, battery)
    theta = min(1.0, phi.lower_index) / 2.0
    atomic_lhs = atomic_norm_functional(decomp.entries, phi, theta, f)
    mx = grand_maximal(f, cfg.maximal.N, cfg.get_dictionary(f.n), cfg.maximal)
    hardy_proxy = luxemburg_norm(mx, phi)

    coarse = GridFunction.zeros(f.box, eval_resolution)
    lhs_norm = calderon_hardy_norm(PolyClass(F, k=1, n=f.n), phi, q, 2.0, coarse, solver_cfg)
    diagnostics = {
        "weak_residual": wr,
        "reconstruction_residual_l2": decomp.residual_l2,
        "reconstruction_residual_without_tail": decomp.residual_without_tail,
        "atomic_norm_lhs": atomic_lhs,
        "hardy_proxy_norm": hardy_proxy,
        "atomic_norm_constant": atomic_lhs / hardy_proxy if hardy_proxy > 0 else math.inf,
        "norm_lhs": hardy_proxy,
        "norm_rhs": lhs_norm,
        "ratio": hardy_proxy / lhs_norm if lhs_norm > 0 else math.inf,
        "decomposition": {
            "atoms": len(decomp.entries),
            "c_run": decomp.c_run,
            "levels": decomp.levels,
            "tail_moment_defect": decomp.tail_moment_defect,
        },
    }
    return F, diagnostics

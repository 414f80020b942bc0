"""Quadrature rules tied to the group structure.

The workhorse identity is the change of variables w = z . (r . v):

    int_{B(z,r)} F(w) dw = r^Q int_{B(e,1)} F(z . (r . v)) dv

so one canonical midpoint rule on the unit Koranyi ball serves every center
and radius.  Convolutions use the analogous substitution u = t . v over the
support box of the kernel profile.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .group import infer_n, koranyi_norm, symplectic_form


@dataclass(frozen=True)
class NodeRule:
    """Nodes v_i and weights w_i approximating int F(v) dv over a reference set."""

    nodes: np.ndarray    # (K, 2n+1)
    weights: np.ndarray  # (K,)

    @property
    def n(self) -> int:
        return infer_n(self.nodes)

    def total_weight(self) -> float:
        return float(self.weights.sum())


@lru_cache(maxsize=None)
def unit_ball_rule(n: int = 1, res: int = 9) -> NodeRule:
    """Midpoint rule over the unit Koranyi ball (cell centers with rho < 1)."""
    dim = 2 * n + 1
    axes = [(-1.0 + (np.arange(res) + 0.5) * 2.0 / res) for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1).reshape(-1, dim)
    mask = koranyi_norm(pts) < 1.0
    pts = pts[mask]
    w = np.full(pts.shape[0], (2.0 / res) ** dim)
    return NodeRule(pts, w)


@lru_cache(maxsize=None)
def box_rule(n: int = 1, res: int = 9, half_width: float = 1.0,
             t_half_width: float | None = None) -> NodeRule:
    """Midpoint rule over [-hw, hw]^{2n} x [-tw, tw].

    The t-axis width defaults to hw^2, matching the anisotropy of Koranyi
    balls (a rho-ball of radius R spans |t| <= R^2).
    """
    dim = 2 * n + 1
    tw = float(t_half_width) if t_half_width is not None else float(half_width) ** 2
    widths = [float(half_width)] * (2 * n) + [tw]
    axes = [(-w + (np.arange(res) + 0.5) * 2.0 * w / res) for w in widths]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1).reshape(-1, dim)
    cell = float(np.prod([2.0 * w / res for w in widths]))
    return NodeRule(pts, np.full(pts.shape[0], cell))


def kernel_rule(phi, n: int = 1, res: int = 9) -> NodeRule:
    """Nodes with weights w_i * phi(v_i); total_weight then approximates int phi."""
    radius = getattr(phi, "support_radius", None) or 1.0
    base = box_rule(n, res, half_width=float(radius))
    vals = np.asarray(phi(base.nodes), dtype=float)
    keep = vals != 0.0
    return NodeRule(base.nodes[keep], base.weights[keep] * vals[keep])


def translate_nodes(centers: np.ndarray, scale: float, nodes: np.ndarray) -> np.ndarray:
    """Points z . (scale . v) for every center z and node v.

    centers: (..., 2n+1); nodes: (K, 2n+1) -> output (..., K, 2n+1).
    """
    centers = np.asarray(centers, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    sv = nodes.copy()
    sv[:, :-1] *= scale
    sv[:, -1] *= scale * scale
    cx = centers[..., None, :-1]
    ct = centers[..., None, -1]
    out_x = cx + sv[:, :-1]
    out_t = ct + sv[:, -1] + symplectic_form(cx, sv[:, :-1])
    return np.concatenate([out_x, np.broadcast_to(out_t, out_x.shape[:-1])[..., None]], axis=-1)


def convolution_points(targets: np.ndarray, scale: float, nodes: np.ndarray) -> np.ndarray:
    """Points z . (scale . v)^{-1}; (scale.v)^{-1} = scale.(v^{-1})."""
    return translate_nodes(targets, scale, -np.asarray(nodes, dtype=float))


def ball_average(g, center: np.ndarray, radius: float, rule: NodeRule,
                 power: float = 1.0, clip: bool = True) -> float:
    """(|B|^{-1} int_B |g|^p)^... mean of |g|^power over B(center, radius).

    g is a GridFunction; nodes falling outside its box are dropped and the
    measure renormalized (clipped-ball policy) when clip=True, else they
    count as zeros.
    """
    pts = translate_nodes(np.asarray(center, dtype=float), radius, rule.nodes)
    inside = g.box.contains(pts)
    vals = np.abs(g.interp(pts, mode="nearest")) ** power
    w = rule.weights
    if clip:
        denom = float(w[inside].sum())
        if denom <= 0.0:
            return 0.0
        return float((w[inside] * vals[inside]).sum() / denom)
    return float((w * np.where(inside, vals, 0.0)).sum() / w.sum())


def refined_cell_offsets(spacing: np.ndarray, factor: int) -> tuple:
    """Subcell midpoint offsets and subcell volume for local refinement."""
    spacing = np.asarray(spacing, dtype=float)
    dim = spacing.size
    axes = [(-0.5 + (np.arange(factor) + 0.5) / factor) * spacing[a] for a in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    offs = np.stack(mesh, axis=-1).reshape(-1, dim)
    vol = float(np.prod(spacing)) / factor ** dim
    return offs, vol

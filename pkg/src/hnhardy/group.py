"""Heisenberg group algebra and Koranyi geometry.

Points of H^n are numpy arrays whose last axis has length 2n+1, laid out as
(x_1, ..., x_2n, t).  All operations are vectorized over leading axes and
pure; the unit-ball volume constant is cached per n.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.integrate import quad


@dataclass(frozen=True)
class GroupConfig:
    """Ambient H^n parameters; Q = 2n+2 is the homogeneous dimension."""

    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def Q(self) -> int:
        return 2 * self.n + 2

    @property
    def dim(self) -> int:
        return 2 * self.n + 1


def infer_n(z: np.ndarray) -> int:
    dim = np.asarray(z).shape[-1]
    if dim < 3 or dim % 2 == 0:
        raise ValueError(f"point dimension must be 2n+1, got {dim}")
    return (dim - 1) // 2


def symplectic_matrix(n: int) -> np.ndarray:
    """The 2n x 2n matrix J = 2*[[0, -I_n], [I_n, 0]] of the group law."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -2.0 * np.eye(n)
    J[n:, :n] = 2.0 * np.eye(n)
    return J


def hpoint(x, t) -> np.ndarray:
    """Assemble a point from horizontal coordinates x (length 2n) and t."""
    x = np.asarray(x, dtype=float)
    z = np.concatenate([x, [float(t)]])
    if not np.all(np.isfinite(z)):
        raise ValueError("coordinates must be finite")
    infer_n(z)
    return z


def identity(n: int = 1) -> np.ndarray:
    return np.zeros(2 * n + 1)


def symplectic_form(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x^T J y = 2 * sum_i (x_{n+i} y_i - x_i y_{n+i}), vectorized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = x.shape[-1] // 2
    xa, xb = x[..., :m], x[..., m:]
    ya, yb = y[..., :m], y[..., m:]
    return 2.0 * ((xb * ya).sum(axis=-1) - (xa * yb).sum(axis=-1))


def multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Group law (x,t)*(y,s) = (x+y, t+s+x^T J y)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError("dimension mismatch between group elements")
    infer_n(p)
    x, t = p[..., :-1], p[..., -1]
    y, s = q[..., :-1], q[..., -1]
    out_t = t + s + symplectic_form(x, y)
    return np.concatenate([x + y, out_t[..., None]], axis=-1)


def inverse(z: np.ndarray) -> np.ndarray:
    """(x,t)^{-1} = (-x,-t)."""
    z = np.asarray(z, dtype=float)
    infer_n(z)
    return -z


def dilate(lam: float, z: np.ndarray) -> np.ndarray:
    """Anisotropic dilation lam.(x,t) = (lam*x, lam^2*t), lam > 0."""
    if lam <= 0:
        raise ValueError("dilation parameter must be positive")
    z = np.asarray(z, dtype=float)
    infer_n(z)
    out = z * lam
    out[..., -1] = z[..., -1] * lam * lam
    return out


def koranyi_norm(z: np.ndarray) -> np.ndarray:
    """rho(x,t) = (|x|^4 + t^2)^(1/4)."""
    z = np.asarray(z, dtype=float)
    infer_n(z)
    x2 = (z[..., :-1] ** 2).sum(axis=-1)
    return (x2 * x2 + z[..., -1] ** 2) ** 0.25


def group_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """rho(p^{-1} * q)."""
    return koranyi_norm(multiply(inverse(p), q))


@dataclass(frozen=True)
class KoranyiBall:
    """B(center, radius) = {w : rho(center^{-1} w) < radius}."""

    center: tuple
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        infer_n(c)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(v) for v in c))

    @property
    def n(self) -> int:
        return infer_n(np.asarray(self.center))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return group_distance(np.asarray(self.center), pts) < self.radius

    def dilated(self, lam: float) -> "KoranyiBall":
        return KoranyiBall(self.center, lam * self.radius)

    def volume(self) -> float:
        return ball_volume(self.radius, self.n)


@lru_cache(maxsize=None)
def unit_ball_volume(n: int = 1) -> float:
    """|B(e,1)| by exact radial reduction.

    For |x| = r < 1 the t-section has length 2*sqrt(1-r^4), so
    |B| = surf(S^{2n-1}) * int_0^1 r^{2n-1} 2 sqrt(1-r^4) dr, and with
    u = r^2 the integral is the Beta value Gamma(n/2)Gamma(3/2)/(2 Gamma(n/2+3/2)).
    For n=1 this evaluates to pi^2/2.
    """
    surf = 2.0 * math.pi ** n / math.gamma(n)
    radial = math.gamma(n / 2.0) * math.gamma(1.5) / (2.0 * math.gamma(n / 2.0 + 1.5))
    return surf * radial


def ball_volume(delta: float, n: int = 1) -> float:
    """|B(z0, delta)| = c_ball * delta^Q, independent of the center."""
    if delta <= 0:
        raise ValueError("radius must be positive")
    return unit_ball_volume(n) * delta ** (2 * n + 2)


def monte_carlo_unit_ball_volume(n: int, samples: int, seed: int = 0) -> tuple:
    """Seeded Monte-Carlo estimate of |B(e,1)| with its standard error.

    Independent of the quadrature route in unit_ball_volume; used for
    cross-validation and recorded in run metadata.
    """
    rng = np.random.default_rng(seed)
    dim = 2 * n + 1
    box_vol = 2.0 ** dim
    hits = 0
    chunk = 1_000_000
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = rng.uniform(-1.0, 1.0, size=(m, dim))
        hits += int((koranyi_norm(pts) < 1.0).sum())
        done += m
    p = hits / samples
    est = box_vol * p
    se = box_vol * math.sqrt(max(p * (1.0 - p), 1e-300) / samples)
    return est, se

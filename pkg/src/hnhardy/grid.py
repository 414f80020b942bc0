"""Uniform box grids on R^(2n+1) with midpoint quadrature and binary I/O.

A GridFunction stores samples of a scalar function at the midpoints of a
uniform cell partition of a box.  The quadrature weight of every sample is
the cell volume, so ``integral`` is the plain midpoint rule.  Files are a
one-line JSON header followed by raw little-endian float64 in C order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

HEADER_MAGIC = "hnhardy-grid-v1"


def check_dimension(dim: int) -> int:
    """Return n for an ambient dimension 2n+1, rejecting anything else."""
    if dim < 3 or dim % 2 == 0:
        raise ValueError(f"ambient dimension must be 2n+1 with n >= 1, got {dim}")
    return (dim - 1) // 2


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in R^(2n+1)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d and matching")
        if not np.all(hi > lo):
            raise ValueError("box must have positive widths")
        check_dimension(lo.size)
        object.__setattr__(self, "lo", tuple(float(v) for v in lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in hi))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def n(self) -> int:
        return (self.dim - 1) // 2

    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def volume(self) -> float:
        return float(np.prod(self.widths()))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    @classmethod
    def cube(cls, half_width: float, n: int = 1) -> "Box":
        d = 2 * n + 1
        return cls((-half_width,) * d, (half_width,) * d)


class GridFunction:
    """Midpoint samples of a scalar function on a uniform box grid."""

    def __init__(self, box: Box, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != box.dim:
            raise ValueError("values rank must equal box dimension")
        self.box = box
        self.values = values

    # -- geometry -----------------------------------------------------
    @property
    def n(self) -> int:
        return self.box.n

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def resolution(self) -> tuple:
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        return self.box.widths() / np.asarray(self.values.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list:
        lo = np.asarray(self.box.lo)
        h = self.spacing
        return [lo[a] + (np.arange(m) + 0.5) * h[a] for a, m in enumerate(self.values.shape)]

    def points(self) -> np.ndarray:
        """All sample points, shape (*resolution, dim)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def flat_points(self) -> np.ndarray:
        return self.points().reshape(-1, self.dim)

    # -- quadrature ---------------------------------------------------
    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def lp_norm(self, p: float) -> float:
        if np.isinf(p):
            return float(np.abs(self.values).max(initial=0.0))
        return float((np.abs(self.values) ** p).sum() * self.cell_volume) ** (1.0 / p)

    def sup_norm(self) -> float:
        return self.lp_norm(np.inf)

    # -- algebra ------------------------------------------------------
    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.box, values)

    def __add__(self, other):
        return self.with_values(self.values + self._coerce(other))

    def __sub__(self, other):
        return self.with_values(self.values - self._coerce(other))

    def __mul__(self, other):
        return self.with_values(self.values * self._coerce(other))

    __rmul__ = __mul__

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if other.box != self.box or other.values.shape != self.values.shape:
                raise ValueError("grid mismatch")
            return other.values
        return other

    # -- evaluation ---------------------------------------------------
    def fractional_index(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        lo = np.asarray(self.box.lo)
        return (pts - lo) / self.spacing - 0.5

    def interp(self, pts: np.ndarray, mode: str = "constant") -> np.ndarray:
        """Trilinear interpolation at arbitrary points.

        mode='constant' extends by zero outside the box (convolution
        semantics), mode='nearest' clamps (clipped ball averages).
        """
        pts = np.asarray(pts, dtype=float)
        idx = self.fractional_index(pts.reshape(-1, self.dim))
        out = map_coordinates(self.values, idx.T, order=1, mode=mode, cval=0.0)
        return out.reshape(pts.shape[:-1])

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_callable(cls, fn, box: Box, resolution) -> "GridFunction":
        resolution = tuple(int(r) for r in np.broadcast_to(resolution, (box.dim,)))
        g = cls(box, np.zeros(resolution))
        vals = np.asarray(fn(g.points()), dtype=float)
        if vals.shape != resolution:
            raise ValueError("callable returned wrong shape")
        g.values = vals
        return g

    @classmethod
    def zeros(cls, box: Box, resolution) -> "GridFunction":
        resolution = tuple(int(r) for r in np.broadcast_to(resolution, (box.dim,)))
        return cls(box, np.zeros(resolution))

    # -- I/O ------------------------------------------------------------
    def save(self, path) -> None:
        header = {
            "magic": HEADER_MAGIC,
            "n": self.n,
            "lo": list(self.box.lo),
            "hi": list(self.box.hi),
            "resolution": list(self.values.shape),
            "dtype": "<f8",
            "order": "C",
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "GridFunction":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            if header.get("magic") != HEADER_MAGIC:
                raise ValueError(f"not a grid file: {path}")
            res = tuple(header["resolution"])
            raw = fh.read()
        values = np.frombuffer(raw, dtype="<f8").reshape(res).copy()
        return cls(Box(tuple(header["lo"]), tuple(header["hi"])), values)


def aligned_subwindow(parent: GridFunction, lo_idx, hi_idx) -> GridFunction:
    """Extract a cell-aligned window [lo_idx, hi_idx) as its own GridFunction."""
    lo_idx = np.asarray(lo_idx, dtype=int)
    hi_idx = np.asarray(hi_idx, dtype=int)
    lo_idx = np.clip(lo_idx, 0, parent.values.shape)
    hi_idx = np.clip(hi_idx, 0, parent.values.shape)
    h = parent.spacing
    lo = np.asarray(parent.box.lo) + lo_idx * h
    hi = np.asarray(parent.box.lo) + hi_idx * h
    sl = tuple(slice(a, b) for a, b in zip(lo_idx, hi_idx))
    return GridFunction(Box(tuple(lo), tuple(hi)), parent.values[sl].copy())

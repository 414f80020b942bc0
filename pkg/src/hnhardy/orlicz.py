"""Orlicz functions, modulars and Luxemburg norms.

The built-in families (power, sum, min, tlog) carry declared lower/upper
type exponents with their constants; the derived indices i(Phi), I(Phi) are
read from that metadata, never estimated numerically (a sup/inf over all
admissible types is ill-posed on finite scans).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridFunction


@dataclass(frozen=True)
class TypeBound:
    """Declared positive type: Phi(r t) <= const * r^p * Phi(t)."""

    p: float
    const: float = 1.0


@dataclass(frozen=True)
class OrliczSpec:
    """An Orlicz function with evaluator and growth metadata.

    upper_open marks families (tlog) that are of upper type p for every
    p > upper.p but not for upper.p itself; the inf of admissible upper
    types is still upper.p.
    """

    family: str
    params: tuple
    evaluate: callable = field(compare=False, repr=False)
    lower: TypeBound = TypeBound(1.0)
    upper: TypeBound = TypeBound(1.0)
    upper_open: bool = False
    convex: bool = False
    strictly_increasing: bool = True
    bijective: bool = True

    def __call__(self, t):
        return self.evaluate(np.asarray(t, dtype=float))

    @property
    def lower_index(self) -> float:
        """i(Phi): sup of admissible lower types (metadata)."""
        return self.lower.p

    @property
    def upper_index(self) -> float:
        """I(Phi): inf of admissible upper types (metadata)."""
        return self.upper.p

    def to_json(self) -> dict:
        return {"family": self.family, "params": list(self.params)}

    @staticmethod
    def from_json(obj: dict) -> "OrliczSpec":
        return builtin_phi(obj["family"], *obj.get("params", []))


def builtin_phi(family: str, *params: float) -> OrliczSpec:
    """Construct one of the built-in Orlicz families.

    power p      : t^p
    sum p1 p2    : t^p1 + t^p2          (p1 <= p2)
    min p1 p2    : min(t^p1, t^p2)      (p1 <= p2)
    tlog         : t * log(e + t)
    """
    if family == "power":
        (p,) = params
        if not p > 0:
            raise ValueError("power exponent must be positive")
        return OrliczSpec(
            family, (float(p),),
            evaluate=lambda t, p=float(p): np.abs(t) ** p,
            lower=TypeBound(float(p)), upper=TypeBound(float(p)),
            convex=p >= 1.0,
        )
    if family == "sum":
        p1, p2 = params
        if not (0 < p1 <= p2):
            raise ValueError("need 0 < p1 <= p2")
        return OrliczSpec(
            family, (float(p1), float(p2)),
            evaluate=lambda t, a=float(p1), b=float(p2): np.abs(t) ** a + np.abs(t) ** b,
            lower=TypeBound(float(p1)), upper=TypeBound(float(p2)),
            convex=p1 >= 1.0,
        )
    if family == "min":
        p1, p2 = params
        if not (0 < p1 <= p2):
            raise ValueError("need 0 < p1 <= p2")
        return OrliczSpec(
            family, (float(p1), float(p2)),
            evaluate=lambda t, a=float(p1), b=float(p2): np.minimum(np.abs(t) ** a, np.abs(t) ** b),
            lower=TypeBound(float(p1)), upper=TypeBound(float(p2)),
            convex=False,
        )
    if family == "tlog":
        if params:
            raise ValueError("tlog takes no parameters")
        return OrliczSpec(
            family, (),
            evaluate=lambda t: np.abs(t) * np.log(np.e + np.abs(t)),
            lower=TypeBound(1.0), upper=TypeBound(1.0), upper_open=True,
            convex=True,
        )
    raise ValueError(f"unknown Orlicz family {family!r}")


def modular(f, phi: OrliczSpec) -> float:
    """kappa_Phi(f) = int Phi(|f|) dz by grid quadrature."""
    if isinstance(f, GridFunction):
        vals = f.values
        vol = f.cell_volume
    else:
        raise TypeError("modular expects a GridFunction")
    return float(phi.evaluate(np.abs(vals)).sum() * vol)


def phi_inverse(phi: OrliczSpec, s: float) -> float:
    """Phi^{-1}(s) = inf{t >= 0 : Phi(t) > s}, by bracketed bisection."""
    s = float(s)
    if s < 0:
        raise ValueError("argument must be nonnegative")
    if s == 0.0:
        return 0.0
    hi = 1.0
    for _ in range(200):
        if float(phi.evaluate(hi)) > s:
            break
        hi *= 2.0
    else:
        raise ArithmeticError("could not bracket the inverse from above")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while lo > 0 and float(phi.evaluate(lo)) > s:
        lo /= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(phi.evaluate(mid)) > s:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(hi, 1e-300):
            break
    return 0.5 * (lo + hi)


def indicator_norm(measure: float, phi: OrliczSpec) -> float:
    """||chi_E||_Phi = 1 / Phi^{-1}(1/|E|) for bijective Phi."""
    if measure <= 0:
        return 0.0
    if not phi.bijective:
        raise ValueError("indicator formula needs a bijective Orlicz function")
    return 1.0 / phi_inverse(phi, 1.0 / measure)


def luxemburg_norm(f: GridFunction, phi: OrliczSpec,
                   rel_tol: float = 1e-10, max_iter: int = 80) -> float:
    """||f||_Phi = inf{lam > 0 : kappa_Phi(f/lam) <= 1} by bisection.

    lam -> kappa(f/lam) is monotone nonincreasing, so bisection is globally
    safe.  The initial bracket is centered at sup|f| / Phi^{-1}(1/vol) and
    expanded if needed.
    """
    sup = float(np.abs(f.values).max(initial=0.0))
    if sup == 0.0:
        return 0.0
    vol = f.box.volume()
    lam0 = sup / phi_inverse(phi, 1.0 / vol)
    lo, hi = lam0 / 10.0, lam0 * 10.0

    def kappa(lam):
        return float(phi.evaluate(np.abs(f.values) / lam).sum() * f.cell_volume)

    expansions = 0
    while kappa(hi) > 1.0:
        hi *= 10.0
        expansions += 1
        if expansions > 60:
            raise ArithmeticError("Luxemburg bracket expansion failed (modular stays > 1)")
    while kappa(lo) <= 1.0 and lo > 1e-300:
        lo /= 10.0
        expansions += 1
        if expansions > 120:
            break
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        if kappa(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * hi:
            break
    return hi


def phi_power(phi: OrliczSpec, s: float) -> OrliczSpec:
    """Phi_s(t) = Phi(t^s); type exponents scale by s."""
    if s <= 0:
        raise ValueError("power must be positive")
    if s == 1.0:
        return phi
    base = phi.evaluate
    return OrliczSpec(
        family=f"{phi.family}^({s})",
        params=phi.params + (float(s),),
        evaluate=lambda t, b=base, s=float(s): b(np.abs(t) ** s),
        lower=TypeBound(phi.lower.p * s, phi.lower.const),
        upper=TypeBound(phi.upper.p * s, phi.upper.const),
        upper_open=phi.upper_open,
        convex=False,  # composition need not preserve convexity; not needed downstream
        strictly_increasing=phi.strictly_increasing,
        bijective=phi.bijective,
    )


class _ConjugateEvaluator:
    """Phi*(s) = sup_t (t s - Phi(t)), per-call ternary refinement + cache.

    The map t -> ts - Phi(t) is concave for convex Phi; a log-grid bracket
    followed by ternary search reaches machine accuracy, which the Young
    inequality checks need (1e-9 slack leaves no room for interpolation).
    """

    def __init__(self, phi: OrliczSpec):
        self.phi = phi
        self._cache: dict = {}
        self._tgrid = np.concatenate([[0.0], np.geomspace(1e-12, 1e12, 400)])

    def _sup(self, s: float) -> float:
        phi_t = self.phi.evaluate(self._tgrid)
        vals = self._tgrid * s - phi_t
        k = int(np.argmax(vals))
        lo = self._tgrid[max(k - 1, 0)]
        hi = self._tgrid[min(k + 1, self._tgrid.size - 1)]
        if hi <= lo:
            hi = lo + 1.0
        f = lambda t: t * s - float(self.phi.evaluate(t))
        for _ in range(200):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if f(m1) < f(m2):
                lo = m1
            else:
                hi = m2
            if hi - lo <= 1e-15 * max(hi, 1.0):
                break
        t = 0.5 * (lo + hi)
        return max(f(t), max(vals[0], 0.0))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        flat = np.ravel(s)
        out = np.empty_like(flat)
        for i, si in enumerate(flat):
            key = float(si)
            if key not in self._cache:
                self._cache[key] = max(self._sup(key), 0.0)
            out[i] = self._cache[key]
        return out.reshape(s.shape)


def complementary(phi: OrliczSpec) -> OrliczSpec:
    """The Young conjugate Phi*(s) = sup_t (ts - Phi(t)); requires convex Phi."""
    if not phi.convex:
        raise ValueError(f"complementary function needs a convex Orlicz function, got {phi.family}{phi.params}")
    # conjugate exponents swap: lower/upper types p give types p' = p/(p-1)
    def conj(p):
        return p / (p - 1.0) if p > 1.0 else math.inf

    return OrliczSpec(
        family=f"{phi.family}*",
        params=phi.params,
        evaluate=_ConjugateEvaluator(phi),
        lower=TypeBound(conj(phi.upper.p)),
        upper=TypeBound(conj(phi.lower.p)),
        convex=True,
        strictly_increasing=True,
        bijective=True,
    )


def verify_type_bounds(phi: OrliczSpec, r_grid=None, t_grid=None) -> dict:
    """Scan Phi(rt) <= C r^p Phi(t) for the declared lower/upper types.

    For upper_open families the upper bound is scanned at p + 0.1 with an
    empirical constant.  Returns measured constants and worst ratios.
    """
    if r_grid is None:
        r_lo = np.geomspace(1e-6, 1.0, 60)
        r_hi = np.geomspace(1.0, 1e6, 60)
    else:
        r_lo = r_grid[r_grid <= 1.0]
        r_hi = r_grid[r_grid >= 1.0]
    if t_grid is None:
        t_grid = np.geomspace(1e-6, 1e6, 80)
    R_lo, T = np.meshgrid(r_lo, t_grid, indexing="ij")
    ratio_lo = phi.evaluate(R_lo * T) / (R_lo ** phi.lower.p * phi.evaluate(T))
    p_up = phi.upper.p + (0.1 if phi.upper_open else 0.0)
    R_hi, T2 = np.meshgrid(r_hi, t_grid, indexing="ij")
    ratio_hi = phi.evaluate(R_hi * T2) / (R_hi ** p_up * phi.evaluate(T2))
    c_lo = float(np.nanmax(ratio_lo))
    c_hi = float(np.nanmax(ratio_hi))
    return {
        "family": phi.family,
        "params": list(phi.params),
        "lower_p": phi.lower.p,
        "lower_const_measured": c_lo,
        "lower_pass": bool(c_lo <= phi.lower.const * (1 + 1e-9)),
        "upper_p": p_up,
        "upper_const_measured": c_hi,
        "upper_pass": bool(np.isfinite(c_hi)),
    }


def quasi_triangle_constant(phi: OrliczSpec, samples: int = 32, seed: int = 0,
                            box=None, resolution=12) -> float:
    """Empirical K in ||f+g|| <= K(||f|| + ||g||) on random grid pairs.

    The paper-level constant is not quantified; this measures and reports.
    """
    from .grid import Box

    rng = np.random.default_rng(seed)
    box = box or Box.cube(1.0, 1)
    worst = 0.0
    for _ in range(samples):
        f = GridFunction(box, rng.standard_normal((resolution,) * 3))
        g = GridFunction(box, rng.standard_normal((resolution,) * 3))
        nf = luxemburg_norm(f, phi)
        ng = luxemburg_norm(g, phi)
        nsum = luxemburg_norm(f + g, phi)
        if nf + ng > 0:
            worst = max(worst, nsum / (nf + ng))
    return worst

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hnhardy.grid import Box, GridFunction
from hnhardy.group import KoranyiBall, ball_volume, koranyi_norm
from hnhardy.orlicz import (
    OrliczSpec,
    builtin_phi,
    complementary,
    indicator_norm,
    luxemburg_norm,
    modular,
    phi_inverse,
    phi_power,
    quasi_triangle_constant,
    verify_type_bounds,
)

BOX = Box.cube(1.0, 1)
FAMILIES = [("power", (2.0,)), ("sum", (1.0, 2.0)), ("min", (0.5, 1.5)), ("tlog", ())]


def random_grid(rng, res=10, positive=False):
    vals = rng.standard_normal((res, res, res))
    if positive:
        vals = np.abs(vals) + 0.05
    return GridFunction(BOX, vals)


def test_builtin_families_basic_axioms():
    ts = np.geomspace(1e-6, 1e6, 50)
    for fam, args in FAMILIES:
        phi = builtin_phi(fam, *args)
        vals = phi.evaluate(ts)
        assert phi.evaluate(0.0) == 0.0
        assert np.all(np.diff(vals) >= 0)
        assert np.all(vals[ts > 0] > 0)
        assert vals[-1] > 100.0  # diverges (min family only like sqrt(t))


def test_builtin_power_at_one():
    assert builtin_phi("power", 3.0).evaluate(1.0) == pytest.approx(1.0)


def test_builtin_invalid_exponents():
    with pytest.raises(ValueError):
        builtin_phi("power", 0.0)
    with pytest.raises(ValueError):
        builtin_phi("sum", 2.0, 1.0)
    with pytest.raises(ValueError):
        builtin_phi("bogus")


def test_declared_type_bounds_scan():
    # direct inequality scan oracle for every family
    for fam, args in FAMILIES:
        rep = verify_type_bounds(builtin_phi(fam, *args))
        assert rep["lower_pass"], rep
        assert rep["upper_pass"], rep


def test_tlog_upper_type_every_p():
    # upper-type inequality holds for every p > 1 (scan a few), lower type 1
    phi = builtin_phi("tlog")
    r = np.geomspace(1.0, 1e6, 50)
    t = np.geomspace(1e-6, 1e6, 50)
    R, T = np.meshgrid(r, t, indexing="ij")
    for p in (1.05, 1.5, 3.0):
        ratio = phi.evaluate(R * T) / (R ** p * phi.evaluate(T))
        assert np.isfinite(ratio.max())
    assert phi.lower_index == 1.0 and phi.upper_index == 1.0 and phi.upper_open


def test_modular_zero_and_indicator():
    phi = builtin_phi("power", 1.7)
    zero = GridFunction.zeros(BOX, 8)
    assert modular(zero, phi) == 0.0
    g = GridFunction.from_callable(
        lambda p: (np.abs(p).max(axis=-1) < 0.5).astype(float), BOX, 16)
    # Phi(1) = 1 so the modular equals |E| up to boundary cells
    measured = modular(g, phi)
    assert measured == pytest.approx(1.0, abs=2 * 6 * 0.5 ** 2 * g.spacing[0])


def test_modular_monte_carlo_oracle():
    phi = builtin_phi("power", 2.0)
    g = GridFunction.from_callable(
        lambda p: np.exp(-3.0 * (p ** 2).sum(axis=-1)), BOX, 24)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.0, 1.0, size=(400_000, 3))
    mc = float(np.exp(-6.0 * (pts ** 2).sum(axis=-1)).mean()) * BOX.volume()
    assert modular(g, phi) == pytest.approx(mc, rel=0.01)


@pytest.mark.parametrize("p", [0.8, 1.0, 2.0])
def test_luxemburg_matches_lp(p):
    rng = np.random.default_rng(int(10 * p))
    phi = builtin_phi("power", p)
    for _ in range(5):
        f = random_grid(rng)
        assert luxemburg_norm(f, phi) == pytest.approx(f.lp_norm(p), rel=1e-6)


def test_luxemburg_zero_function():
    assert luxemburg_norm(GridFunction.zeros(BOX, 8), builtin_phi("power", 2.0)) == 0.0


def test_luxemburg_indicator_formula():
    # ||chi_E||_Phi = 1 / Phi^{-1}(1/|E|) for bijective Phi
    for fam, args in FAMILIES:
        phi = builtin_phi(fam, *args)
        g = GridFunction.from_callable(
            lambda p: (np.abs(p).max(axis=-1) < 0.4992).astype(float), BOX, 20)
        measure = g.integral()
        assert luxemburg_norm(g, phi) == pytest.approx(
            1.0 / phi_inverse(phi, 1.0 / measure), rel=1e-6)


def test_luxemburg_scaling_homogeneity():
    rng = np.random.default_rng(5)
    phi = builtin_phi("sum", 1.0, 2.0)
    f = random_grid(rng)
    base = luxemburg_norm(f, phi)
    for alpha in (0.3, 2.0, -1.5):
        assert luxemburg_norm(alpha * f, phi) == pytest.approx(abs(alpha) * base, rel=1e-8)


def test_luxemburg_modular_consistency():
    # kappa(f / ||f||) <= 1 at the computed norm
    rng = np.random.default_rng(9)
    phi = builtin_phi("tlog")
    f = random_grid(rng, positive=True)
    lam = luxemburg_norm(f, phi)
    assert modular(f * (1.0 / lam), phi) <= 1.0 + 1e-9


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 2 ** 31 - 1))
def test_luxemburg_monotone_in_domination(seed):
    rng = np.random.default_rng(seed)
    phi = builtin_phi("min", 0.5, 2.0)
    f = np.abs(rng.standard_normal((6, 6, 6)))
    g = f + np.abs(rng.standard_normal((6, 6, 6)))
    nf = luxemburg_norm(GridFunction(BOX, f), phi)
    ng = luxemburg_norm(GridFunction(BOX, g), phi)
    assert nf <= ng * (1 + 1e-9)


def test_modular_to_zero_implies_norm_to_zero():
    phi = builtin_phi("power", 2.0)  # finite upper type
    rng = np.random.default_rng(3)
    f = random_grid(rng, positive=True)
    norms = []
    for eps in (1.0, 0.1, 0.01, 0.001):
        scaled = eps * f
        norms.append((modular(scaled, phi), luxemburg_norm(scaled, phi)))
    mods, lux = zip(*norms)
    assert all(b < a for a, b in zip(mods, mods[1:]))
    assert all(b < a for a, b in zip(lux, lux[1:]))
    assert lux[-1] <= 1e-2 * lux[0]


def test_lower_bound_estimates():
    # Phi(t) >= c t^{p+} on (0,1] and >= c t^{p-} on [1, inf) for built-ins
    for fam, args in FAMILIES:
        phi = builtin_phi(fam, *args)
        lo = np.geomspace(1e-6, 1.0, 40)
        hi = np.geomspace(1.0, 1e6, 40)
        up = phi.upper_index + (0.1 if phi.upper_open else 0.0)
        c1 = (phi.evaluate(lo) / lo ** up).min()
        c2 = (phi.evaluate(hi) / hi ** phi.lower_index).min()
        assert c1 > 0 and c2 > 0


@pytest.mark.parametrize("s", [0.5, 2.0])
@pytest.mark.parametrize("fam,args", FAMILIES)
def test_power_composition_identity(fam, args, s):
    # ||f||_Phi^s = || |f|^s ||_{Phi_{1/s}}
    rng = np.random.default_rng(hash((fam, s)) % 2 ** 32)
    phi = builtin_phi(fam, *args)
    f = random_grid(rng, positive=True)
    lhs = luxemburg_norm(f, phi) ** s
    rhs = luxemburg_norm(f.with_values(np.abs(f.values) ** s), phi_power(phi, 1.0 / s))
    assert rhs == pytest.approx(lhs, rel=1e-6)


def test_phi_power_trivial_and_power_family():
    phi = builtin_phi("power", 1.5)
    same = phi_power(phi, 1.0)
    assert same is phi
    comp = phi_power(phi, 2.0)
    ts = np.geomspace(0.01, 100, 20)
    assert np.allclose(comp.evaluate(ts), ts ** 3.0)
    assert comp.lower_index == pytest.approx(3.0)


def test_complementary_square_brute_force_oracle():
    phi = builtin_phi("power", 2.0)
    star = complementary(phi)
    svals = np.geomspace(0.01, 100, 15)
    tgrid = np.linspace(0, 1e4, 2_000_001)
    for s in svals:
        # brute-force sup oracle over a dense t grid
        brute = float((tgrid * s - tgrid ** 2).max())
        assert float(star.evaluate(s)) == pytest.approx(s * s / 4.0, rel=1e-6)
        assert float(star.evaluate(s)) >= brute - 1e-9


def test_young_inequality_scan():
    rng = np.random.default_rng(13)
    for fam, args in (("power", (2.0,)), ("power", (1.5,)), ("sum", (1.0, 2.0)), ("tlog", ())):
        phi = builtin_phi(fam, *args)
        star = complementary(phi)
        t = rng.uniform(0.0, 30.0, 2500)
        s = rng.uniform(0.0, 30.0, 2500)
        slack = t * s - (phi.evaluate(t) + star.evaluate(s))
        assert float(slack.max()) <= 1e-9


def test_complementary_rejects_nonconvex():
    with pytest.raises(ValueError):
        complementary(builtin_phi("min", 0.5, 1.5))
    with pytest.raises(ValueError):
        complementary(builtin_phi("power", 0.7))


def test_inverse_product_double_inequality():
    for fam, args in (("power", (2.0,)), ("sum", (1.0, 3.0)), ("tlog", ())):
        phi = builtin_phi(fam, *args)
        star = complementary(phi)
        for s in np.geomspace(1e-4, 1e4, 60):
            prod = phi_inverse(phi, s) * phi_inverse(star, s)
            assert s * (1 - 1e-9) <= prod <= 2 * s * (1 + 1e-9)


def test_phi_inverse_power_and_roundtrip():
    phi = builtin_phi("power", 3.0)
    assert phi_inverse(phi, 8.0) == pytest.approx(2.0, rel=1e-9)
    for fam, args in FAMILIES:
        phi = builtin_phi(fam, *args)
        for s in (0.1, 1.0, 17.3):
            assert phi.evaluate(phi_inverse(phi, s)) == pytest.approx(s, rel=1e-9)


def test_tlog_inverse_newton_oracle():
    phi = builtin_phi("tlog")
    s = 1.0
    # independent Newton iteration on t log(e+t) - s
    t = 0.5
    for _ in range(60):
        val = t * math.log(math.e + t) - s
        dval = math.log(math.e + t) + t / (math.e + t)
        t -= val / dval
    assert phi_inverse(phi, s) == pytest.approx(t, rel=1e-9)


def test_serialization_roundtrip():
    for fam, args in FAMILIES:
        phi = builtin_phi(fam, *args)
        blob = json.dumps(phi.to_json())
        back = OrliczSpec.from_json(json.loads(blob))
        ts = np.geomspace(0.01, 100, 17)
        assert np.allclose(back.evaluate(ts), phi.evaluate(ts))
        assert back.lower_index == phi.lower_index


def test_indicator_norm_matches_ball():
    phi = builtin_phi("power", 2.0)
    vol = ball_volume(0.8, 1)
    assert indicator_norm(vol, phi) == pytest.approx(vol ** 0.5, rel=1e-9)


def test_quasi_triangle_constant_reported():
    K = quasi_triangle_constant(builtin_phi("power", 0.8), samples=8, seed=1, resolution=8)
    assert np.isfinite(K) and K > 0

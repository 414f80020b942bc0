"""Named verification suites behind the command-line `verify` entry point.

Each suite runs a battery of the library's invariants at small desk scale
and returns a JSON-ready report; determinism comes from the config seed.
"""
from __future__ import annotations

import math

import numpy as np

from .calculus import (
    SmoothField,
    coordinate_symbols,
    gaussian_like,
    monomial_basis,
    radial_poly_bump,
    sublaplacian_field,
    xfield,
)
from .grid import Box, GridFunction
from .group import (
    KoranyiBall,
    ball_volume,
    dilate,
    group_distance,
    identity,
    inverse,
    koranyi_norm,
    monte_carlo_unit_ball_volume,
    multiply,
    unit_ball_volume,
)
from .maximal import (
    MaximalConfig,
    default_dictionary,
    discrete_maximal,
    fefferman_stein_check,
    grand_maximal,
    heat_style_convolution,
    hl_maximal,
    peak_maximal,
    radial_base_profile,
)
from .orlicz import (
    builtin_phi,
    complementary,
    indicator_norm,
    luxemburg_norm,
    modular,
    phi_inverse,
    phi_power,
    verify_type_bounds,
)
from .atoms import critical_moment_order, infinity_atom_as, make_atom, moment_gram, validate_atom
from .potential import (
    SolverConfig,
    calderon_maximal,
    cn_constant,
    cn_monte_carlo,
    cn_normalizing_integral,
    fundamental_pairing,
    potential,
    potential_at_points,
    t_coordinate_class,
    truncated_modular_growth,
)
from .czd import (
    DecompositionConfig,
    WhitneyConstants,
    atomic_decompose,
    level_sets,
    verify_cover,
    weak_residual_report,
    whitney_cover,
)

SUITES = ("group", "orlicz", "maximal", "atoms", "potential", "czd", "triviality")


def _check(name, ok, **info):
    row = {"name": name, "pass": bool(ok)}
    row.update(info)
    return row


def run_group_suite(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    checks = []
    p, q, r = rng.normal(size=(3, 3))
    assoc = multiply(multiply(p, q), r) - multiply(p, multiply(q, r))
    checks.append(_check("associativity", np.abs(assoc).max() <= 1e-12,
                         max_abs=float(np.abs(assoc).max())))
    checks.append(_check("identity", np.abs(multiply(identity(1), p) - p).max() <= 1e-12))
    checks.append(_check("inverse", np.abs(multiply(p, inverse(p))).max() <= 1e-12))
    lam = 1.7
    zs = rng.normal(size=(64, 3))
    homog = np.abs(koranyi_norm(dilate(lam, zs)) - lam * koranyi_norm(zs)).max()
    checks.append(_check("norm_homogeneity", homog <= 1e-12, max_abs=float(homog)))
    pairs = rng.normal(size=(10_000, 2, 3))
    tri = koranyi_norm(multiply(pairs[:, 0], pairs[:, 1])) - (
        koranyi_norm(pairs[:, 0]) + koranyi_norm(pairs[:, 1]))
    checks.append(_check("quasi_triangle_gamma_1", float(tri.max()) <= 1e-12,
                         worst=float(tri.max())))
    ratio = ball_volume(2.0, 1) / ball_volume(1.0, 1)
    checks.append(_check("ball_scaling_2Q", abs(ratio - 16.0) <= 1e-12, ratio=ratio))
    est, se = monte_carlo_unit_ball_volume(1, 400_000, seed)
    checks.append(_check("ball_constant_mc", abs(est - unit_ball_volume(1)) <= 3 * se,
                         quadrature=unit_ball_volume(1), monte_carlo=est, stderr=se))
    # change of center: int_B f = int_{z0^{-1} B} f(z0 u) du
    z0 = np.array([0.4, -0.2, 0.3])
    ball = KoranyiBall((0.5, 0.1, -0.2), 0.8)
    from .quadrature import translate_nodes, unit_ball_rule

    rule = unit_ball_rule(1, 9)
    f = gaussian_like(1)
    lhs = float((rule.weights * f(translate_nodes(np.asarray(ball.center), ball.radius,
                                                  rule.nodes))).sum())
    shifted = KoranyiBall(tuple(multiply(inverse(z0), np.asarray(ball.center))), ball.radius)
    pts = translate_nodes(np.asarray(shifted.center), ball.radius, rule.nodes)
    rhs = float((rule.weights * f(multiply(z0, pts))).sum())
    checks.append(_check("change_of_center", abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0),
                         lhs=lhs, rhs=rhs))
    return _suite_report("group", checks, {"seed": seed})


def run_orlicz_suite(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    checks = []
    box = Box.cube(1.0, 1)
    for p in (0.8, 1.0, 2.0):
        phi = builtin_phi("power", p)
        f = GridFunction(box, rng.standard_normal((10, 10, 10)))
        lux = luxemburg_norm(f, phi)
        direct = f.lp_norm(p)
        checks.append(_check(f"luxemburg_lp_p{p}", abs(lux - direct) <= 1e-6 * direct,
                             luxemburg=lux, lp=direct))
    phi = builtin_phi("sum", 1.0, 2.0)
    measure = 0.37
    ind = indicator_norm(measure, phi)
    direct = 1.0 / phi_inverse(phi, 1.0 / measure)
    checks.append(_check("indicator_formula", abs(ind - direct) <= 1e-9))
    # fits identity on one family
    f = GridFunction(box, np.abs(rng.standard_normal((10, 10, 10))) + 0.1)
    for s in (0.5, 2.0):
        lhs = luxemburg_norm(f, phi) ** s
        rhs = luxemburg_norm(f.with_values(np.abs(f.values) ** s), phi_power(phi, 1.0 / s))
        checks.append(_check(f"power_identity_s{s}", abs(lhs - rhs) <= 1e-6 * max(lhs, 1e-12),
                             lhs=lhs, rhs=rhs))
    # Young + inverse double inequality for a convex family
    conv = builtin_phi("power", 1.5)
    star = complementary(conv)
    ts = rng.uniform(0, 50, size=(2000, 2))
    slack = ts[:, 0] * ts[:, 1] - (conv.evaluate(ts[:, 0]) + star.evaluate(ts[:, 1]))
    checks.append(_check("young_inequality", float(slack.max()) <= 1e-9,
                         worst=float(slack.max())))
    svals = np.geomspace(1e-3, 1e3, 40)
    prod = np.array([phi_inverse(conv, s) * phi_inverse(star, s) for s in svals])
    ok = np.all(prod >= svals * (1 - 1e-9)) and np.all(prod <= 2 * svals * (1 + 1e-9))
    checks.append(_check("inverse_product_bounds", ok))
    for fam, args in (("power", (2.0,)), ("sum", (1.0, 2.0)), ("min", (0.5, 1.5)), ("tlog", ())):
        rep = verify_type_bounds(builtin_phi(fam, *args))
        checks.append(_check(f"type_bounds_{fam}", rep["lower_pass"] and rep["upper_pass"],
                             **{k: v for k, v in rep.items() if "pass" not in k}))
    return _suite_report("orlicz", checks, {"seed": seed})


def run_maximal_suite(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    checks = []
    box = Box.cube(4.0, 1)
    cfg = MaximalConfig(j_range=(-3, 1))
    f = GridFunction.from_callable(lambda p: np.exp(-2 * (p ** 2).sum(axis=-1)), box, 24)
    phi = radial_base_profile(1, 7)
    from .quadrature import kernel_rule

    conv = heat_style_convolution(f, phi, 0, cfg)
    mass = kernel_rule(phi, 1, cfg.kernel_res).total_weight()
    checks.append(_check("mass_preservation",
                         abs(conv.integral() - f.integral() * mass) <= 2e-2 * abs(f.integral() * mass),
                         conv=conv.integral(), expected=f.integral() * mass))
    dm = discrete_maximal(f, phi, cfg)
    pm = peak_maximal(f, phi, cfg.L, cfg)
    checks.append(_check("discrete_le_peak", bool(np.all(dm.values <= pm.values + 1e-12))))
    gm = grand_maximal(f, 7, [phi], cfg)
    checks.append(_check("singleton_grand_equals_discrete",
                         bool(np.allclose(gm.values, dm.values))))
    ind = GridFunction.from_callable(lambda p: (koranyi_norm(p) < 1.0).astype(float),
                                     Box.cube(8.0, 1), 32)
    m_near = hl_maximal(ind, np.array([0.2, 0.1, 0.0]), MaximalConfig(boundary="zero"))
    checks.append(_check("hl_indicator_inside", abs(m_near - 1.0) <= 0.15, value=m_near))
    fam = [GridFunction(box, rng.standard_normal((16, 16, 16))) for _ in range(3)]
    rep = fefferman_stein_check(fam, 2.0, builtin_phi("power", 2.0), MaximalConfig(), bound=50.0)
    checks.append(_check("fefferman_stein_ratio", rep["pass"], ratio=rep["ratio"]))
    return _suite_report("maximal", checks, {"seed": seed})


def run_atoms_suite(seed: int = 0) -> dict:
    checks = []
    for p, expect in ((1.0, 4), (0.5, 8), (2.0 / 3.0, 4)):
        got = critical_moment_order(builtin_phi("power", p), 1)
        checks.append(_check(f"critical_order_p{p:.3g}", got == expect, value=got))
    phi = builtin_phi("power", 2.0 / 3.0)
    ball = KoranyiBall((0.3, -0.2, 0.4), 1.0)
    bump = radial_poly_bump(1, 2.0, 6)
    atom = make_atom(lambda p: bump(p - np.array([0.3, -0.2, 0.4])) + 0.2 * p[..., 0],
                     ball, phi, math.inf, 4)
    rep = validate_atom(atom)
    checks.append(_check("make_atom_m4", rep["pass"],
                         worst_moment=rep["moments"]["worst_relative"]))
    rep2 = validate_atom(infinity_atom_as(atom, 2.0))
    checks.append(_check("inf_atom_as_p0", rep2["pass"]))
    G = moment_gram(ball, 4)
    checks.append(_check("gram_spd", float(np.linalg.eigvalsh(G).min()) > 0.0,
                         min_eig=float(np.linalg.eigvalsh(G).min())))
    return _suite_report("atoms", checks, {"seed": seed})


def run_potential_suite(seed: int = 0) -> dict:
    checks = []
    c_rad = cn_constant(1, "radial")
    c_mid = cn_constant(1, "midpoint")
    checks.append(_check("cn_two_schemes", abs(c_rad - c_mid) <= 5e-3 * c_rad,
                         radial=c_rad, midpoint=c_mid))
    est, se = cn_monte_carlo(1, 1_000_000, seed)
    integral = cn_normalizing_integral(1)
    checks.append(_check("cn_monte_carlo", abs(est - integral) <= 3 * se,
                         quadrature=integral, monte_carlo=est, stderr=se))
    u = radial_poly_bump(1, 1.4, 6)
    val = fundamental_pairing(u, 1, resolution=40, refine_radius=0.45)
    checks.append(_check("fundamental_pairing", abs(val - 1.0) <= 0.01, value=val))
    # kernel dilation homogeneity
    from .potential import fundamental_kernel

    z = np.array([0.7, -0.3, 0.5])
    lam = 1.9
    k1 = fundamental_kernel(dilate(lam, z), 1)
    k2 = lam ** -2.0 * fundamental_kernel(z, 1)
    checks.append(_check("kernel_homogeneity", abs(k1 - k2) <= 1e-12 * abs(k2)))
    from .calculus import fundamental_kernel_field

    Lk = sublaplacian_field(fundamental_kernel_field(1))
    pts = np.array([[1.0, 0.5, 0.3], [0.6, 0.0, -0.4], [0.0, 0.9, 0.7]])
    checks.append(_check("kernel_harmonic", float(np.abs(Lk(pts)).max()) <= 1e-10,
                         max_abs=float(np.abs(Lk(pts)).max())))
    return _suite_report("potential", checks, {"seed": seed})


def run_czd_suite(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    checks = []
    box = Box.cube(4.0, 1)
    g = GridFunction.zeros(box, 20)
    pts = g.points()
    mask = np.zeros(g.resolution, bool)
    for _ in range(3):
        c = rng.uniform(-1.5, 1.5, 3)
        mask |= KoranyiBall(tuple(c), float(rng.uniform(0.7, 1.4))).contains(pts)
    cover = whitney_cover(mask, g, WhitneyConstants())
    rep = verify_cover(cover, mask, g)
    checks.append(_check("whitney_w1_w4", rep["pass"], overlap=rep["w4_overlap"],
                         balls=rep["balls"]))
    # level sets nest
    field = GridFunction.from_callable(lambda p: np.exp(-(p ** 2).sum(axis=-1)), box, 20)
    masks = level_sets(field, range(-6, 0))
    nested = all(np.all(b <= a) for a, b in zip(masks, masks[1:]))
    checks.append(_check("level_sets_nested", nested))
    # single-atom reconstruction
    phi = builtin_phi("power", 1.0)
    grid = GridFunction.zeros(Box.cube(6.0, 1), 32)
    bump = radial_poly_bump(1, 1.0, 6)
    atom = make_atom(lambda p: bump(p) * (1 + 0.3 * p[..., 0]),
                     KoranyiBall((0.0, 0.0, 0.0), 1.0), phi, math.inf, 4, grid=grid)
    f = 0.05 * atom.samples
    cfg = DecompositionConfig(num_levels=6)
    dec = atomic_decompose(f, phi, m=4, cfg=cfg)
    checks.append(_check("single_atom_reconstruction", dec.residual_l2 <= 1e-2,
                         residual=dec.residual_l2, atoms=len(dec)))
    return _suite_report("czd", checks, {"seed": seed})


def run_triviality_suite(seed: int = 0) -> dict:
    phi = builtin_phi("power", 0.4)
    rep = truncated_modular_growth(phi, 1.3, samples_per_shell=32, doublings=3, seed=seed)
    checks = [_check("modular_divergence", rep["strictly_increasing"],
                     modulars=rep["modulars"], radii=rep["radii"])]
    return _suite_report("triviality", checks, {"seed": seed})


def _suite_report(name: str, checks: list, config: dict) -> dict:
    return {
        "suite": name,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "config": config,
    }


def run_suite(name: str, seed: int = 0) -> dict:
    fns = {
        "group": run_group_suite,
        "orlicz": run_orlicz_suite,
        "maximal": run_maximal_suite,
        "atoms": run_atoms_suite,
        "potential": run_potential_suite,
        "czd": run_czd_suite,
        "triviality": run_triviality_suite,
    }
    if name not in fns:
        raise KeyError(name)
    return fns[name](seed)

"""Command-line entry point: verification suites, the Poisson solve, exports.

Exit codes: 0 pass, 1 assertion failure, 2 usage, 3 inadmissible parameters,
4 I/O.  Reports are single JSON documents; identical config + seed produce
byte-identical output (no timestamps, sorted keys).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_PARAMS = 3
EXIT_IO = 4


@dataclass
class RunConfig:
    """Run parameters; the solver inequalities are validated at load."""

    n: int = 1
    bounds: float = 6.0
    resolution: int = 48
    orlicz: dict = field(default_factory=lambda: {"family": "power", "params": [1.0]})
    q: float = 1.2
    m: int | None = None
    N: int = 2
    seed: int = 0
    num_levels: int = 10
    tolerances: dict = field(default_factory=dict)
    out_dir: str = "out"

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        cfg = cls()
        if path:
            with open(path) as fh:
                data = json.load(fh)
            for key, val in data.items():
                if not hasattr(cfg, key):
                    raise KeyError(f"unknown config key {key!r}")
                setattr(cfg, key, val)
        if not 1.0 < cfg.q < (cfg.n + 1) / cfg.n:
            raise ValueError(f"config violates 1 < q < (n+1)/n: q = {cfg.q}")
        return cfg

    def phi(self):
        from .orlicz import OrliczSpec

        return OrliczSpec.from_json(self.orlicz)


def _dump(report: dict, out_dir: str, name: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1, default=float)
        fh.write("\n")
    return path


def cmd_verify(args) -> int:
    from .suites import SUITES, run_suite

    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = RunConfig.load(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    seed = args.seed if args.seed is not None else cfg.seed
    report = run_suite(args.suite, seed=seed)
    path = _dump(report, args.out or cfg.out_dir, f"verify_{args.suite}.json")
    print(f"{'PASS' if report['pass'] else 'FAIL'} suite={args.suite} report={path}")
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def _load_input_field(path: str, cfg: RunConfig):
    """Grid file (.hgrid) or atom manifest (.json) -> GridFunction."""
    from .atoms import make_atom
    from .calculus import radial_poly_bump
    from .grid import Box, GridFunction
    from .group import KoranyiBall

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(path)
    if p.suffix == ".json":
        with open(p) as fh:
            manifest = json.load(fh)
        box = Box.cube(cfg.bounds, cfg.n)
        grid = GridFunction.zeros(box, cfg.resolution)
        phi = cfg.phi()
        total = grid.with_values(np.zeros(grid.resolution))
        for entry in manifest["atoms"]:
            ball = KoranyiBall(tuple(entry["ball"]["center"]), float(entry["ball"]["radius"]))
            prof = entry.get("profile", {})
            power = int(prof.get("power", 6))
            tilt = prof.get("tilt", [0.0, 0.0, 0.0])
            bump = radial_poly_bump(cfg.n, ball.radius, power)
            c = np.asarray(ball.center)

            def profile(pts, c=c, bump=bump, tilt=tilt):
                rel = np.asarray(pts, dtype=float) - c
                base = bump(np.stack(
                    [rel[..., 0], rel[..., 1],
                     rel[..., 2] - 2.0 * (c[1] * rel[..., 0] - c[0] * rel[..., 1])], axis=-1))
                lin = 1.0 + sum(t * np.asarray(pts)[..., a] for a, t in enumerate(tilt))
                return base * lin

            atom = make_atom(profile, ball, phi, math.inf,
                             int(entry.get("m", cfg.m or 4)), grid=grid)
            total = total + float(entry.get("coeff", 1.0)) * atom.samples
        return total
    return GridFunction.load(p)


def cmd_solve(args) -> int:
    from .czd import DecompositionConfig, ParameterError, solve_poisson
    from .maximal import MaximalConfig

    try:
        cfg = RunConfig.load(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    from .czd import check_solver_preconditions

    try:
        check_solver_preconditions(cfg.phi(), cfg.q, cfg.n)
    except ParameterError as exc:
        print(f"inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    try:
        f = _load_input_field(args.input, cfg)
    except FileNotFoundError as exc:
        print(f"input not found: {exc}", file=sys.stderr)
        return EXIT_IO
    dcfg = DecompositionConfig(
        maximal=MaximalConfig(boundary="zero", N=cfg.N, j_range=(-3, 6)),
        num_levels=cfg.num_levels)
    try:
        F, diag = solve_poisson(f, cfg.phi(), cfg.q, m=cfg.m, cfg=dcfg)
    except ParameterError as exc:
        print(f"inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    F.save(out / "solution.hgrid")
    _dump(diag, str(out), "diagnostics.json")
    print(f"solved: F -> {out/'solution.hgrid'}  weak residual "
          f"{diag['weak_residual']['worst']:.4f}")
    return EXIT_PASS


def cmd_export(args) -> int:
    from .grid import GridFunction
    from .group import koranyi_norm

    p = Path(args.input)
    if not p.exists():
        print(f"field file not found: {p}", file=sys.stderr)
        return EXIT_IO
    g = GridFunction.load(p)
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    if args.what == "ray":
        # profile along the +x1 midline with rho and log-log slope columns
        res = g.resolution
        mid = [r // 2 for r in res]
        axis_vals = g.axes()[0]
        rows = []
        prev = None
        for i, x in enumerate(axis_vals):
            z = np.array([x, g.axes()[1][mid[1]], g.axes()[2][mid[2]]])
            val = float(g.values[i, mid[1], mid[2]])
            rho = float(koranyi_norm(z))
            slope = ""
            if prev is not None and prev[1] != 0 and val != 0 and rho > 0 and prev[0] > 0 \
                    and rho != prev[0]:
                slope = (math.log(abs(val)) - math.log(abs(prev[1]))) / \
                        (math.log(rho) - math.log(prev[0]))
            rows.append((rho, val, slope))
            prev = (rho, val)
    else:
        k = g.resolution[-1] // 2
        rows = [(float(x1), float(x2), float(g.values[i, j, k]))
                for i, x1 in enumerate(g.axes()[0])
                for j, x2 in enumerate(g.axes()[1])]
    name = out / f"export_{args.what}.{args.format}"
    if args.format == "csv":
        with open(name, "w") as fh:
            fh.write("c1,c2,c3\n" if args.what != "ray" else "rho,value,slope\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
    else:
        with open(name, "w") as fh:
            json.dump({"what": args.what, "rows": [list(r) for r in rows]}, fh,
                      sort_keys=True, default=float)
            fh.write("\n")
    print(f"exported {len(rows)} rows -> {name}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hnhardy",
                                 description="Orlicz-Hardy analysis on the Heisenberg group")
    sub = ap.add_subparsers(dest="command")
    v = sub.add_parser("verify", help="run a named invariant suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--config", default=None)
    v.add_argument("--out", default=None)
    v.add_argument("--seed", type=int, default=None)
    s = sub.add_parser("solve", help="solve L F = f from a grid file or atom manifest")
    s.add_argument("--input", required=True)
    s.add_argument("--config", default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--seed", type=int, default=None)
    e = sub.add_parser("export", help="export slices / ray profiles of a field")
    e.add_argument("--input", required=True)
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("--what", choices=("ray", "slice"), default="ray")
    e.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    handlers = {"verify": cmd_verify, "solve": cmd_solve, "export": cmd_export}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())

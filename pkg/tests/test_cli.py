import json
from pathlib import Path

import numpy as np
import pytest

from hnhardy.cli import EXIT_IO, EXIT_PARAMS, EXIT_PASS, EXIT_USAGE, RunConfig, main
from hnhardy.grid import Box, GridFunction


def test_unknown_suite_usage_error(tmp_path):
    assert main(["verify", "--suite", "nope", "--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_subcommand_usage():
    assert main([]) == EXIT_USAGE


def test_verify_group_suite_passes(tmp_path):
    assert main(["verify", "--suite", "group", "--out", str(tmp_path)]) == EXIT_PASS
    report = json.loads((tmp_path / "verify_group.json").read_text())
    assert report["pass"] and report["suite"] == "group"


def test_verify_deterministic_reports(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["verify", "--suite", "atoms", "--out", str(a), "--seed", "7"]) == EXIT_PASS
    assert main(["verify", "--suite", "atoms", "--out", str(b), "--seed", "7"]) == EXIT_PASS
    assert (a / "verify_atoms.json").read_bytes() == (b / "verify_atoms.json").read_bytes()


def test_runconfig_validates_q(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"q": 3.0}))
    with pytest.raises(ValueError):
        RunConfig.load(str(cfg))


def test_solve_missing_input(tmp_path):
    assert main(["solve", "--input", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == EXIT_IO


def test_solve_subcritical_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "orlicz": {"family": "power", "params": [0.4]},
        "q": 1.3, "resolution": 12, "bounds": 2.0, "num_levels": 3,
    }))
    manifest = tmp_path / "f.json"
    manifest.write_text(json.dumps({
        "atoms": [{"ball": {"center": [0, 0, 0], "radius": 0.8}, "coeff": 1.0, "m": 0}]}))
    code = main(["solve", "--input", str(manifest), "--config", str(cfg),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_PARAMS


def test_solve_single_atom_manifest(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "orlicz": {"family": "power", "params": [1.2]},
        "q": 1.2, "resolution": 24, "bounds": 5.0, "num_levels": 6, "N": 2,
    }))
    manifest = tmp_path / "f.json"
    manifest.write_text(json.dumps({
        "atoms": [{"ball": {"center": [0.0, 0.0, 0.0], "radius": 1.0},
                   "coeff": 0.1, "m": 0, "profile": {"power": 6, "tilt": [0.2, 0, 0]}}]}))
    out = tmp_path / "out"
    code = main(["solve", "--input", str(manifest), "--config", str(cfg), "--out", str(out)])
    assert code == EXIT_PASS
    F = GridFunction.load(out / "solution.hgrid")
    assert np.isfinite(F.values).all() and np.abs(F.values).max() > 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert "weak_residual" in diag


def test_export_ray_and_missing(tmp_path):
    g = GridFunction.from_callable(
        lambda p: np.exp(-(p ** 2).sum(axis=-1)), Box.cube(2.0, 1), 12)
    field = tmp_path / "field.hgrid"
    g.save(field)
    assert main(["export", "--input", str(field), "--format", "csv",
                 "--out", str(tmp_path)]) == EXIT_PASS
    rows = (tmp_path / "export_ray.csv").read_text().strip().splitlines()
    assert rows[0] == "rho,value,slope"
    assert len(rows) == 13
    assert main(["export", "--input", str(tmp_path / "ghost.hgrid"),
                 "--out", str(tmp_path)]) == EXIT_IO


def test_export_empty_field(tmp_path):
    g = GridFunction.zeros(Box.cube(1.0, 1), 6)
    field = tmp_path / "zero.hgrid"
    g.save(field)
    assert main(["export", "--input", str(field), "--format", "csv",
                 "--what", "slice", "--out", str(tmp_path)]) == EXIT_PASS
    rows = (tmp_path / "export_slice.csv").read_text().strip().splitlines()
    assert rows[0] == "c1,c2,c3"


def test_grid_roundtrip_bytes(tmp_path):
    g = GridFunction.from_callable(
        lambda p: p[..., 0] + 2 * p[..., 2], Box.cube(1.5, 1), 8)
    path = tmp_path / "g.hgrid"
    g.save(path)
    back = GridFunction.load(path)
    assert np.array_equal(back.values, g.values)
    assert back.box == g.box

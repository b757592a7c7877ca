import json
import math
from pathlib import Path

import numpy as np
import pytest

from growthpoly.cli import main


def run_cli(*args):
    return main(list(args))


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


GEOMETRIC = {
    "t0": "1.0",
    "moments": {"kind": "geometric", "beta": "0.5", "a": "2.5"},
    "degrees": [3, 5],
    "boundary_samples": 256,
    "raster_resolution": 48,
    "seed": 7,
}


def read_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    assert lines[0].startswith("# schema_version=1 config_sha256=")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return header, rows


def test_solve_map_worked_triple(tmp_path):
    cfg = write_config(tmp_path, {
        "t0": str(8 / 9),
        "moments": {"kind": "geometric", "beta": str(8 / 9), "a": str(8 / 3)},
        "degrees": [3],
    })
    out = tmp_path / "out"
    assert run_cli("solve-map", "--config", cfg, "--out", str(out),
                   "--no-figures") == 0
    doc = json.loads((out / "map.json").read_text())
    assert doc["r"] == pytest.approx(1.0, abs=1e-6)
    assert doc["v"][0] == pytest.approx(0.25, abs=1e-6)
    assert doc["A"][0] == pytest.approx(0.5, abs=1e-6)
    assert doc["regime"] == "SimplyConnected"
    assert doc["univalent"] is False          # cusp-marginal triple
    assert doc["config_sha256"]
    header, rows = read_csv(out / "boundary.csv")
    assert header == ["theta", "re_z", "im_z", "measure"]
    assert len(rows) == 1024


def test_solve_map_disk(tmp_path):
    cfg = write_config(tmp_path, {
        "t0": "2.0",
        "moments": {"kind": "geometric", "beta": "0", "a": "1"},
        "degrees": [3],
    })
    out = tmp_path / "out"
    assert run_cli("solve-map", "--config", cfg, "--out", str(out),
                   "--no-figures") == 0
    doc = json.loads((out / "map.json").read_text())
    assert doc["r"] == pytest.approx(math.sqrt(2.0))
    assert doc["v"] == [0.0, 0.0]


def test_solve_map_regime_exit_code(tmp_path):
    cfg = write_config(tmp_path, {
        "t0": "1.0",
        "moments": {"kind": "geometric", "beta": "2.0", "a": "0.05"},
        "degrees": [3],
    })
    out = tmp_path / "out"
    assert run_cli("solve-map", "--config", cfg, "--out", str(out),
                   "--no-figures") == 2
    doc = json.loads((out / "map.json").read_text())
    assert doc["regime"] == "DoublyConnected"


def test_config_rejection(tmp_path, capsys):
    cfg = write_config(tmp_path, {"t0": "-1",
                                  "moments": {"kind": "geometric",
                                              "beta": "0.5", "a": "2"}})
    assert run_cli("validate", "--config", cfg,
                   "--out", str(tmp_path / "o")) == 1
    err = capsys.readouterr().err
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["error"] == "config"


def test_density_outputs(tmp_path):
    cfg = write_config(tmp_path, GEOMETRIC)
    out = tmp_path / "out"
    assert run_cli("density", "--config", cfg, "--out", str(out),
                   "--no-figures", "--dump-grid") == 0
    for n in (3, 5):
        assert (out / f"profile_n{n}.csv").exists()
        assert (out / f"density_n{n}.csv").exists()
        doc = json.loads((out / f"basis_n{n}.json").read_text())
        assert doc["schema_version"] == 1 and doc["n"] == n
    header, rows = read_csv(out / "grid.csv")
    assert header == ["re_z", "im_z", "weight"]
    # raster Riemann sum approximates the unit mass
    header, rows = read_csv(out / "density_n5.csv")
    vals = np.array([[float(x) for x in row] for row in rows])
    xs = np.unique(vals[:, 0])
    ys = np.unique(vals[:, 1])
    cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
    assert vals[:, 2].sum() * cell == pytest.approx(1.0, abs=5e-3)


def test_density_disk_profile_constant(tmp_path):
    doc = dict(GEOMETRIC)
    doc["moments"] = {"kind": "geometric", "beta": "0", "a": "1"}
    doc["degrees"] = [6]
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "out"
    assert run_cli("density", "--config", cfg, "--out", str(out),
                   "--no-figures") == 0
    _, rows = read_csv(out / "profile_n6.csv")
    rho = np.array([float(r[1]) for r in rows])
    assert np.max(np.abs(rho - rho.mean())) <= 1e-10 * rho.mean()


def test_kl_and_determinism(tmp_path):
    cfg = write_config(tmp_path, GEOMETRIC)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run_cli("kl", "--config", cfg, "--out", str(out1),
                   "--no-figures") == 0
    assert run_cli("kl", "--config", cfg, "--out", str(out2),
                   "--no-figures") == 0
    b1 = (out1 / "kl.csv").read_bytes()
    b2 = (out2 / "kl.csv").read_bytes()
    assert b1 == b2
    header, rows = read_csv(out1 / "kl.csv")
    assert header == ["k", "raw", "mean_adjusted"]
    adj = [float(r[2]) for r in rows]
    assert all(a >= 0 for a in adj)


def test_zeros_determinism(tmp_path):
    cfg = write_config(tmp_path, GEOMETRIC)
    out1, out2 = tmp_path / "z1", tmp_path / "z2"
    assert run_cli("zeros", "--config", cfg, "--out", str(out1),
                   "--no-figures", "--seed", "5") == 0
    assert run_cli("zeros", "--config", cfg, "--out", str(out2),
                   "--no-figures", "--seed", "5") == 0
    assert (out1 / "zeros_n5.csv").read_bytes() == \
        (out2 / "zeros_n5.csv").read_bytes()


def test_trajectory_command(tmp_path):
    doc = dict(GEOMETRIC)
    doc["degrees"] = [10]
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "out"
    assert run_cli("trajectory", "--config", cfg, "--out", str(out),
                   "--no-figures") == 0
    header, rows = read_csv(out / "trajectory.csv")
    assert header == ["re", "im", "rho_s"]
    dist = json.loads((out / "distance.json").read_text())
    assert dist["mean_normalized_distance"] < 0.05
    curve_doc = json.loads((out / "curve.json").read_text())
    assert len(curve_doc["coeff_a"]["num"]) >= 3


def test_validate_disk_all_green(tmp_path):
    doc = {
        "t0": "1.0",
        "moments": {"kind": "geometric", "beta": "0", "a": "1"},
        "degrees": [4, 6],
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "out"
    assert run_cli("validate", "--config", cfg, "--out", str(out)) == 0
    report = json.loads((out / "validate_report.json").read_text())
    assert report["passed"] is True
    assert all(c["passed"] for c in report["checks"])


def test_evolve_with_cusp_bracket(tmp_path):
    doc = {
        "t0": "1.0",
        "moments": {"kind": "geometric", "beta": "0.5", "a": "2.5"},
        "degrees": [3],
        "evolve": {"t0_values": ["1.0", "4.0", "7.0", "9.0", "10.5"]},
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "out"
    assert run_cli("evolve", "--config", cfg, "--out", str(out),
                   "--no-figures") == 0
    report = json.loads((out / "evolution.json").read_text())
    assert report["nested"] is True
    # the simply connected family closes up at (|a| + sqrt(beta))^2 - beta
    want = (2.5 + math.sqrt(0.5)) ** 2 - 0.5
    assert report["cusp_t0"] == pytest.approx(want, abs=1e-3)
    assert report["cusp_bracket_width"] == 1e-6


def test_figures_rendered(tmp_path):
    doc = dict(GEOMETRIC)
    doc["degrees"] = [4]
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "out"
    assert run_cli("kl", "--config", cfg, "--out", str(out)) == 0
    svg = (out / "kl.svg").read_text()
    assert svg.lstrip().startswith("<?xml")

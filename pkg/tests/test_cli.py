"""Tests for the command-line interface."""
import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rmtlimits.cli import parse_grid, run


def _csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def _dump(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def bernoulli(tmp_path):
    return _dump(tmp_path / "bern.json", {"type": "atoms", "atoms": [[-1, 0.5], [1, 0.5]]})


def test_parse_grid_inclusive():
    g = parse_grid("-3:3:0.005")
    assert g.size == 1201 and g[0] == -3.0 and g[-1] == pytest.approx(3.0, abs=1e-12)
    assert np.any(np.abs(g) <= 1e-12)
    for bad in ("1:0:0.1", "0:1:0", "0:1", "a:b:c"):
        with pytest.raises(Exception):
            parse_grid(bad)


def test_density_semicircle(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert run(["density", "--law", "semicircle", "--w", "1", "--grid", "-3:3:0.005", "--out", str(out)]) == 0
    header, data = _csv(out)
    assert header == ["lambda", "density"]
    i0 = int(np.argmin(np.abs(data[:, 0])))
    assert data[i0, 1] == pytest.approx(1.0 / (math.sqrt(2.0) * math.pi), abs=1e-6)
    assert data[i0, 1] == pytest.approx(0.225079, abs=5e-7)
    assert "0.225079" in capsys.readouterr().out
    m = json.loads((tmp_path / "d.csv.manifest.json").read_text())
    assert m["seed"] == 0 and m["outputs"] == [str(out)]


def test_sample_deterministic(tmp_path):
    spec = _dump(tmp_path / "gue.json", {"family": "GUE", "n": 8, "w": 1.0})
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["sample", "--spec", spec, "--n", "512", "--trials", "4", "--seed", "7"]
    assert run(base + ["--out", str(a)]) == 0
    assert run(base + ["--out", str(b), "--threads", "3"]) == 0
    files = sorted(p.name for p in a.glob("trial_*.csv"))
    assert files == [f"trial_{k:04d}.csv" for k in range(4)]
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()
        header, data = _csv(a / name)
        assert header == ["eigenvalue"] and data.shape == (512, 1)
    assert (a / "manifest.json").exists()


def test_convolve_bernoulli_arcsine(tmp_path, bernoulli):
    out = tmp_path / "conv.csv"
    argv = ["convolve", "--a", bernoulli, "--b", bernoulli, "--grid", "-3:3:0.01", "--out", str(out)]
    assert run(argv) == 0
    _, data = _csv(out)
    i0 = int(np.argmin(np.abs(data[:, 0])))
    assert data[i0, 1] == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-4)
    assert data[i0, 1] == pytest.approx(0.159155, abs=1e-4)


def test_compare_identical_inputs(tmp_path, bernoulli, capsys):
    out = tmp_path / "cmp.csv"
    assert run(["compare", "--a", bernoulli, "--b", bernoulli, "--out", str(out),
                "--report", str(tmp_path / "r.json")]) == 0
    assert "KS = 0" in capsys.readouterr().out
    assert json.loads((tmp_path / "r.json").read_text())["ks"] == 0.0
    header, data = _csv(out)
    assert header == ["lambda", "density_a", "density_b"]
    assert np.array_equal(data[:, 1], data[:, 2])
    cfg = json.loads((tmp_path / "cmp.csv.manifest.json").read_text())["config"]
    assert cfg["bins"] == 100


def test_compare_default_bins_recorded(tmp_path):
    spec = _dump(tmp_path / "gue.json", {"family": "GUE", "n": 50, "w": 1.0})
    out = tmp_path / "cmp.csv"
    assert run(["compare", "--spec", spec, "--trials", "3", "--law", "semicircle", "--w", "1",
                "--out", str(out)]) == 0
    cfg = json.loads((tmp_path / "cmp.csv.manifest.json").read_text())["config"]
    assert cfg["bins"] == math.ceil(math.sqrt(150))
    _, data = _csv(out)
    assert data.shape[0] == cfg["bins"]


def test_equilibrium_quartic_endpoints(tmp_path):
    pot = _dump(tmp_path / "quartic.json", {"coeffs": [0, 0, 0, 0, 0.25]})
    out = tmp_path / "eq.csv"
    rep = tmp_path / "eq.json"
    assert run(["equilibrium", "--potential", pot, "--out", str(out), "--report", str(rep)]) == 0
    d = json.loads(rep.read_text())
    edge = (16.0 / 3.0) ** 0.25
    assert abs(d["b"] - edge) <= 1e-8 and abs(d["a"] + edge) <= 1e-8
    _, data = _csv(out)
    assert np.all(data[:, 1] >= 0.0)


def test_density_mp_and_deformed(tmp_path):
    sigma = _dump(tmp_path / "s.json", {"type": "atoms", "atoms": [[1, 0.5], [3, 0.5]]})
    out = tmp_path / "mp.csv"
    rep = tmp_path / "mp.json"
    assert run(["density", "--law", "mp", "--c", "0.5", "--sigma", sigma, "--grid", "0:8:0.01",
                "--out", str(out), "--report", str(rep)]) == 0
    _, data = _csv(out)
    atom = json.loads(rep.read_text())["atom_at_zero"]
    assert atom == pytest.approx(0.5, abs=1e-12)
    mass = float(np.sum(0.5 * (data[1:, 1] + data[:-1, 1]) * np.diff(data[:, 0])))
    assert mass + atom == pytest.approx(1.0, abs=0.01)
    out2 = tmp_path / "def.csv"
    f0 = _dump(tmp_path / "f0.json", {"type": "atoms", "atoms": [[-1, 0.5], [1, 0.5]]})
    assert run(["density", "--law", "deformed-semicircle", "--w", "1", "--f0", f0, "--grid", "-4:4:0.05",
                "--out", str(out2)]) == 0
    _, data = _csv(out2)
    assert np.all(data[:, 1] >= 0.0)


def test_rerun_byte_identical_any_threads(tmp_path):
    spec = _dump(tmp_path / "goe.json", {"family": "GOE", "n": 8, "w": 1.0})
    outs = []
    for k, threads in enumerate(("1", "2", "1")):
        out = tmp_path / f"conv{k}.csv"
        assert run(["converge", "--spec", spec, "--n-list", "8,12,16", "--trials", "30", "--seed", "3",
                    "--threads", threads, "--out", str(out), "--report", str(tmp_path / f"r{k}.json")]) == 0
        outs.append((out.read_bytes(), (tmp_path / f"r{k}.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]
    m0 = json.loads((tmp_path / "conv0.csv.manifest.json").read_text())
    m1 = json.loads((tmp_path / "conv1.csv.manifest.json").read_text())
    assert m0["config_hash"] == m1["config_hash"]


def test_experiment_commands_run(tmp_path):
    pot = _dump(tmp_path / "g.json", {"coeffs": [0, 0, 0.5]})
    cmds = [
        ["expand", "--law", "rademacher", "--w", "1", "--n-list", "8,16", "--trials", "10"],
        ["clt", "--w", "1", "--n", "8", "--trials", "100"],
        ["lindeberg", "--laws", "rademacher", "--n", "256", "--trials", "1"],
        ["mvcheck", "--potential", pot, "--n", "4", "--steps", "50", "--burn-in", "200", "--step-scale", "1.5"],
    ]
    for k, argv in enumerate(cmds):
        out = tmp_path / f"o{k}.csv"
        assert run(argv + ["--out", str(out)]) == 0, argv
        assert out.exists() and (tmp_path / f"o{k}.csv.manifest.json").exists()


def test_input_errors_exit_1(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert run(["density", "--law", "semicircle", "--grid", "-1:1:0.1", "--out", out, "--bogus"]) == 1
    assert run(["density", "--law", "semicircle", "--grid", "1:-1:0.1", "--out", out]) == 1
    assert run(["nosuchcommand", "--out", out]) == 1
    assert run(["density", "--law", "semicircle", "--grid", "-1:1:0.1"]) == 1
    bad = _dump(tmp_path / "v.json", {"coeffs": [0, 1]})
    assert run(["equilibrium", "--potential", bad, "--out", out]) == 1
    assert "even degree" in capsys.readouterr().err
    assert run(["clt", "--w", "1", "--n", "8", "--trials", "10", "--out", out]) == 1


def test_numerical_failure_exit_2(tmp_path, bernoulli, capsys):
    solver = _dump(tmp_path / "solver.json", {"tol": 1e-30, "max_iter": 3})
    sigma = _dump(tmp_path / "s.json", {"type": "atoms", "atoms": [[1, 0.5], [3, 0.5]]})
    out = str(tmp_path / "x.csv")
    code = run(["density", "--law", "mp", "--c", "0.5", "--sigma", sigma, "--grid", "0:4:0.5",
                "--solver", solver, "--out", out])
    assert code == 2
    assert "residual=" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    out = tmp_path / "d.csv"
    proc = subprocess.run([sys.executable, "-m", "rmtlimits", "density", "--law", "laguerre", "--a", "0.5",
                           "--grid", "0:2:0.5", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.count("\n") == 1

"""Tests for serialization, file I/O and run manifests."""
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rmtlimits import (
    Atoms,
    EnsembleSpec,
    GridDensity,
    InputError,
    MCMCParams,
    Mixture,
    Named,
    PotentialPolynomial,
    SolverConfig,
    semicircle_stieltjes,
    stieltjes_eval,
)
from rmtlimits.config_io import (
    RunManifest,
    atomic_write,
    canonical_json,
    config_hash,
    load_measure,
    load_potential,
    load_solver,
    load_spec,
    measure_from_dict,
    measure_to_dict,
    read_json,
    save_measure,
    save_potential,
    save_solver,
    save_spec,
    spec_to_dict,
    to_jsonable,
    write_csv,
)


def _write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def test_atoms_round_trip_exact(tmp_path):
    m = Atoms(np.array([-1.0 / 3.0, 0.1, 2.0 ** 0.5]), np.array([0.2, 0.3, 0.5]))
    save_measure(m, tmp_path / "a.json")
    back = load_measure(tmp_path / "a.json")
    assert isinstance(back, Atoms)
    assert np.array_equal(back.locations, m.locations)
    assert np.array_equal(back.weights, m.weights)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=8, unique=True))
def test_atoms_round_trip_property(locs):
    n = len(locs)
    m = Atoms(np.array(locs), np.full(n, 1.0 / n))
    back = measure_from_dict(json.loads(canonical_json(measure_to_dict(m))))
    assert np.array_equal(back.locations, m.locations)
    assert np.array_equal(back.weights, m.weights)


def test_grid_round_trip_verbatim(tmp_path):
    grid = np.linspace(-2.0, 2.0, 101)
    vals = np.sqrt(np.clip(4.0 - grid ** 2, 0.0, None)) / (2.0 * np.pi)
    m = GridDensity.normalized(grid, vals)
    save_measure(m, tmp_path / "g.json")
    back = load_measure(tmp_path / "g.json")
    assert np.array_equal(back.grid, m.grid)
    assert np.array_equal(back.values, m.values)
    assert back.domain == m.domain


def test_grid_negative_value_names_index():
    d = {"type": "density", "grid": [0.0, 1.0, 2.0, 3.0], "values": [0.3, 0.4, -0.1, 0.3]}
    with pytest.raises(InputError, match="index 2"):
        measure_from_dict(d)


def test_atoms_mass_rejected():
    with pytest.raises(InputError, match="sum to"):
        measure_from_dict({"type": "atoms", "atoms": [[0, 0.5], [1, 0.4]]})


def test_schema_errors_name_field(tmp_path):
    with pytest.raises(InputError, match=r"atoms\[1\]"):
        measure_from_dict({"type": "atoms", "atoms": [[0, 1.0], [1]]})
    with pytest.raises(InputError, match=r"grid\[1\]"):
        measure_from_dict({"type": "density", "grid": [0, "x"], "values": [1, 1]})
    with pytest.raises(InputError, match="missing field 'values'"):
        measure_from_dict({"type": "density", "grid": [0, 1]})
    with pytest.raises(InputError, match="unknown measure type"):
        measure_from_dict({"type": "spline"})
    p = _write(tmp_path / "bad.json", {"type": "atoms", "atoms": []})
    with pytest.raises(InputError, match="bad.json"):
        load_measure(p)


def test_named_semicircle_resolves(tmp_path):
    p = _write(tmp_path / "n.json", {"type": "named", "name": "semicircle", "params": {"w": 1}})
    m = load_measure(p)
    assert isinstance(m, Named)
    z = np.array([0.5 + 0.1j, 3j, -1.0 + 0.02j])
    assert np.allclose(stieltjes_eval(m, z), semicircle_stieltjes(z, 1.0), rtol=1e-13, atol=0)


def test_mixture_round_trip(tmp_path):
    m = Mixture(((0.25, Atoms(np.array([1.0]), np.array([1.0]))),
                 (0.75, Named("semicircle", {"w": 0.5}))))
    save_measure(m, tmp_path / "m.json")
    back = load_measure(tmp_path / "m.json")
    assert measure_to_dict(back) == measure_to_dict(m)
    z = 0.3 + 0.7j
    assert stieltjes_eval(back, z) == pytest.approx(stieltjes_eval(m, z), abs=1e-15)


def test_canonical_serialization_byte_stable(tmp_path):
    m = GridDensity.normalized(np.linspace(0.0, 1.0, 7), np.array([0.0, 1, 2, 3, 2, 1, 0]) / 3.0)
    p1, p2 = tmp_path / "1.json", tmp_path / "2.json"
    save_measure(m, p1)
    save_measure(load_measure(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


# ---------------------------------------------------------------------------
# potentials, specs, solver settings
# ---------------------------------------------------------------------------

def test_potential_quadratic_accepted(tmp_path):
    v = load_potential(_write(tmp_path / "v.json", {"coeffs": [0, 0, 0.25]}))
    assert isinstance(v, PotentialPolynomial)
    assert v(2.0) == pytest.approx(1.0)


def test_potential_odd_degree_rejected(tmp_path):
    p = _write(tmp_path / "v.json", {"coeffs": [0, 1]})
    with pytest.raises(InputError, match="convex polynomial of an even degree"):
        load_potential(p)


def test_potential_negative_leading_rejected():
    with pytest.raises(InputError, match="positive leading"):
        PotentialPolynomial([0.0, 0.0, -1.0])


def test_potential_round_trip(tmp_path):
    v = PotentialPolynomial([0.0, 0.1, 0.5, 0.0, 0.25])
    save_potential(v, tmp_path / "v.json")
    assert np.array_equal(load_potential(tmp_path / "v.json").coeffs, v.coeffs)


def test_solver_defaults_filled(tmp_path):
    cfg = load_solver(_write(tmp_path / "s.json", {"tol": 1e-10}))
    assert cfg.damping == 0.5
    assert cfg.tol == 1e-10
    assert cfg == SolverConfig(tol=1e-10)
    save_solver(cfg, tmp_path / "t.json")
    assert load_solver(tmp_path / "t.json") == cfg


def test_solver_invalid_rejected(tmp_path):
    with pytest.raises(InputError):
        load_solver(_write(tmp_path / "s.json", {"damping": 1.5}))
    with pytest.raises(InputError):
        load_solver(_write(tmp_path / "s.json", {"y_min": 2.0, "y_start": 1.0}))
    with pytest.raises(InputError):
        load_solver(_write(tmp_path / "s.json", [1, 2]))


@pytest.mark.parametrize("spec", [
    EnsembleSpec("GUE", n=10, w=1.5),
    EnsembleSpec("WignerGeneral", n=6, w=1.0, law="rademacher", normalization="real-symmetric-doubled-diagonal"),
    EnsembleSpec("Laguerre", n=8, m=16, a=0.5),
    EnsembleSpec("Deformed", n=4, base=(1.0, -1.0, 0.5, 0.0), noise=EnsembleSpec("GOE", n=4, w=0.5)),
    EnsembleSpec("InvariantLogGas", n=5, potential=(0.0, 0.0, 0.0, 0.0, 0.25),
                 mcmc=MCMCParams(steps=3, burn_in=10, thin=2, step_scale=0.05)),
], ids=lambda s: s.family)
def test_spec_round_trip(tmp_path, spec):
    save_spec(spec, tmp_path / "s.json")
    back = load_spec(tmp_path / "s.json")
    assert spec_to_dict(back) == spec_to_dict(spec)


def test_spec_unknown_field_rejected(tmp_path):
    with pytest.raises(InputError, match="unknown fields"):
        load_spec(_write(tmp_path / "s.json", {"family": "GUE", "n": 4, "w": 1, "colour": "red"}))
    with pytest.raises(InputError, match=r"\.n"):
        load_spec(_write(tmp_path / "s.json", {"family": "GUE", "n": 4.5, "w": 1}))


# ---------------------------------------------------------------------------
# canonical JSON, hashing, atomic files
# ---------------------------------------------------------------------------

def test_canonical_json_exact_floats():
    x = 0.1 + 0.2
    assert json.loads(canonical_json({"x": x}))["x"] == x
    assert to_jsonable({"c": 1 + 2j, "a": np.arange(2), "f": np.float32(0.5)}) == \
        {"c": [1.0, 2.0], "a": [0, 1], "f": 0.5}


@given(st.dictionaries(st.text(max_size=5), st.floats(allow_nan=False, allow_infinity=False), max_size=6))
def test_config_hash_stable_under_key_order(d):
    reordered = dict(reversed(list(d.items())))
    assert config_hash(d) == config_hash(reordered)
    assert canonical_json(d) == canonical_json(reordered)


def test_config_hash_changes_with_value():
    assert config_hash({"a": 1.0}) != config_hash({"a": 1.0 + 1e-15})


def test_atomic_write_replaces_whole_file(tmp_path):
    p = tmp_path / "sub" / "out.txt"
    atomic_write(p, "first version, longer\n")
    atomic_write(p, b"second\n")
    assert p.read_bytes() == b"second\n"
    assert [f.name for f in p.parent.iterdir()] == ["out.txt"]


def test_read_json_reports_line_and_column(tmp_path):
    p = _write(tmp_path / "bad.json", '{\n  "a": 1,\n  "b": ]\n}')
    with pytest.raises(InputError, match="line 3, column 8"):
        read_json(p)
    with pytest.raises(InputError):
        read_json(tmp_path / "missing.json")


def test_write_csv_repr_floats(tmp_path):
    write_csv(tmp_path / "t.csv", ["x", "y"], [(1, 0.1 + 0.2), (2, 1e-300)])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines == ["x,y", "1,0.30000000000000004", "2,1e-300"]


def test_run_manifest_fields(tmp_path):
    cfg = {"b": 2, "a": [1.0, 2.0]}
    m = RunManifest(command=["density", "--law", "semicircle"], config=cfg, seed=7)
    assert m.config_hash == config_hash({"a": [1.0, 2.0], "b": 2})
    assert m.version and m.backend in ("numba", "numpy") and m.started
    m.outputs.append("x.csv")
    m.finish().write(tmp_path / "manifest.json")
    d = json.loads((tmp_path / "manifest.json").read_text())
    assert set(d) == {"command", "config", "seed", "config_hash", "version", "backend",
                      "started", "finished", "outputs"}
    assert d["seed"] == 7 and d["outputs"] == ["x.csv"] and d["finished"]

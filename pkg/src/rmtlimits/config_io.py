"""JSON/CSV serialization of measures, potentials, ensemble specs, solver settings and reports.

Serialization is canonical: keys are sorted and floats are written with
``repr`` (shortest string that round-trips exactly), so
``serialize(load(x))`` is byte-stable and hashes of configurations do not
depend on key order. Files are written atomically (temporary file in the
target directory, then :func:`os.replace`).
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata

import numpy as np

from .config import SolverConfig
from .ensembles import EnsembleSpec, MCMCParams
from .equilibrium import PotentialPolynomial
from .errors import InputError
from .measures import Atoms, GridDensity, Mixture, Named

__all__ = [
    "RunManifest",
    "to_jsonable",
    "canonical_json",
    "config_hash",
    "atomic_write",
    "read_json",
    "write_json",
    "write_csv",
    "measure_to_dict",
    "measure_from_dict",
    "load_measure",
    "save_measure",
    "potential_from_dict",
    "load_potential",
    "save_potential",
    "spec_to_dict",
    "spec_from_dict",
    "load_spec",
    "save_spec",
    "load_solver",
    "save_solver",
    "library_version",
]


# ---------------------------------------------------------------------------
# canonical JSON and atomic files
# ---------------------------------------------------------------------------

def to_jsonable(obj):
    """Convert numpy scalars/arrays, complex numbers, tuples and dataclasses to JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if obj is None or isinstance(obj, str):
        return obj
    raise InputError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj, indent=2):
    """Deterministic JSON text (sorted keys, exact float round trip, trailing newline)."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=indent, allow_nan=False) + "\n"


def config_hash(obj):
    """SHA-256 of the compact canonical JSON of ``obj``."""
    text = json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def write_json(path, obj):
    atomic_write(path, canonical_json(obj))


def write_csv(path, header, rows):
    """CSV with a header row; floats formatted with ``repr``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write(path, buf.getvalue())


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def measure_to_dict(m):
    if isinstance(m, Atoms):
        d = {"type": "atoms", "atoms": [[float(x), float(w)] for x, w in zip(m.locations, m.weights)]}
        if m.domain != "real":
            d["domain"] = m.domain
        return d
    if isinstance(m, GridDensity):
        return {"type": "density", "grid": m.grid.tolist(), "values": m.values.tolist(), "domain": m.domain}
    if isinstance(m, Named):
        return {"type": "named", "name": m.name, "params": dict(m.params)}
    if isinstance(m, Mixture):
        return {"type": "mixture", "components": [[w, measure_to_dict(c)] for w, c in m.components]}
    raise InputError(f"not a spectral measure: {m!r}")


def _require(d, key, where):
    if not isinstance(d, dict):
        raise InputError(f"{where}: expected an object")
    if key not in d:
        raise InputError(f"{where}: missing field {key!r}")
    return d[key]


def _numbers(values, where):
    if not isinstance(values, list):
        raise InputError(f"{where}: expected a list of numbers")
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InputError(f"{where}[{i}]: expected a number, got {v!r}")
    return np.asarray(values, dtype=float)


def measure_from_dict(d, where="measure"):
    """Build a measure from its JSON form; errors name the offending field."""
    kind = _require(d, "type", where)
    try:
        if kind == "atoms":
            pairs = _require(d, "atoms", where)
            if not isinstance(pairs, list) or not pairs:
                raise InputError(f"{where}.atoms: expected a nonempty list of [location, weight]")
            for i, p in enumerate(pairs):
                if not (isinstance(p, list) and len(p) == 2):
                    raise InputError(f"{where}.atoms[{i}]: expected [location, weight]")
            arr = _numbers([p[0] for p in pairs], f"{where}.atoms locations")
            wts = _numbers([p[1] for p in pairs], f"{where}.atoms weights")
            return Atoms(arr, wts, d.get("domain", "real"))
        if kind == "density":
            grid = _numbers(_require(d, "grid", where), f"{where}.grid")
            values = _numbers(_require(d, "values", where), f"{where}.values")
            return GridDensity(grid, values, d.get("domain", "real"))
        if kind == "named":
            params = d.get("params", {})
            if not isinstance(params, dict):
                raise InputError(f"{where}.params: expected an object")
            return Named(_require(d, "name", where), params)
        if kind == "mixture":
            comps = _require(d, "components", where)
            if not isinstance(comps, list):
                raise InputError(f"{where}.components: expected a list")
            out = []
            for i, c in enumerate(comps):
                if not (isinstance(c, list) and len(c) == 2):
                    raise InputError(f"{where}.components[{i}]: expected [weight, measure]")
                out.append((float(c[0]), measure_from_dict(c[1], f"{where}.components[{i}]")))
            return Mixture(tuple(out))
    except InputError as exc:
        msg = str(exc)
        raise InputError(msg if msg.startswith(where) else f"{where}: {msg}") from None
    except TypeError as exc:
        raise InputError(f"{where}: {exc}") from None
    raise InputError(f"{where}.type: unknown measure type {kind!r}")


def load_measure(path):
    return measure_from_dict(read_json(path), os.fspath(path))


def save_measure(m, path):
    write_json(path, measure_to_dict(m))


# ---------------------------------------------------------------------------
# potentials, specs, solver settings
# ---------------------------------------------------------------------------

def potential_from_dict(d, where="potential"):
    coeffs = _numbers(_require(d, "coeffs", where), f"{where}.coeffs")
    try:
        return PotentialPolynomial(coeffs)
    except InputError as exc:
        raise InputError(f"{where}: {exc}") from None


def load_potential(path):
    return potential_from_dict(read_json(path), os.fspath(path))


def save_potential(v, path):
    write_json(path, v.to_dict())


_SPEC_TUPLES = ("t_values", "diag_a", "diag_b", "potential")


def spec_to_dict(spec):
    out = {"family": spec.family, "n": int(spec.n)}
    for f in dataclasses.fields(spec):
        name = f.name
        if name in ("family", "n"):
            continue
        val = getattr(spec, name)
        if val is None:
            continue
        if name == "normalization" and spec.family != "WignerGeneral":
            continue
        if name == "mcmc":
            if spec.family == "InvariantLogGas":
                out["mcmc"] = val.to_dict()
            continue
        if isinstance(val, EnsembleSpec):
            out[name] = spec_to_dict(val)
        elif name == "base" and not isinstance(val, EnsembleSpec):
            out[name] = [float(x) for x in np.asarray(val, dtype=float).ravel()]
        elif name in _SPEC_TUPLES:
            out[name] = [float(x) for x in val]
        else:
            out[name] = val
    return out


def spec_from_dict(d, where="spec"):
    if not isinstance(d, dict):
        raise InputError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(EnsembleSpec)}
    unknown = set(d) - known
    if unknown:
        raise InputError(f"{where}: unknown fields {sorted(unknown)}")
    kw = dict(d)
    _require(d, "family", where)
    n = _require(d, "n", where)
    if isinstance(n, bool) or not isinstance(n, int):
        raise InputError(f"{where}.n: expected an integer")
    for name in _SPEC_TUPLES:
        if name in kw and kw[name] is not None:
            kw[name] = tuple(_numbers(kw[name], f"{where}.{name}").tolist())
    if "noise" in kw and kw["noise"] is not None:
        kw["noise"] = spec_from_dict(kw["noise"], f"{where}.noise")
    if isinstance(kw.get("base"), dict):
        kw["base"] = spec_from_dict(kw["base"], f"{where}.base")
    elif kw.get("base") is not None:
        kw["base"] = tuple(_numbers(kw["base"], f"{where}.base").tolist())
    if "mcmc" in kw:
        m = kw["mcmc"]
        allowed = {f.name for f in dataclasses.fields(MCMCParams)}
        if not isinstance(m, dict) or set(m) - allowed:
            raise InputError(f"{where}.mcmc: expected an object with fields {sorted(allowed)}")
        kw["mcmc"] = MCMCParams(**m)
    try:
        return EnsembleSpec(**kw)
    except InputError as exc:
        raise InputError(f"{where}: {exc}") from None
    except TypeError as exc:
        raise InputError(f"{where}: {exc}") from None


def load_spec(path):
    return spec_from_dict(read_json(path), os.fspath(path))


def save_spec(spec, path):
    write_json(path, spec_to_dict(spec))


def load_solver(path):
    d = read_json(path)
    if not isinstance(d, dict):
        raise InputError(f"{path}: expected an object")
    try:
        return SolverConfig.from_dict(d)
    except (InputError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def save_solver(cfg, path):
    write_json(path, cfg.to_dict())


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

def library_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__

        return __version__


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Provenance of one CLI run: enough to reproduce its outputs exactly."""

    command: list
    config: dict
    seed: int
    config_hash: str = ""
    version: str = field(default_factory=library_version)
    backend: str = ""
    started: str = field(default_factory=_now)
    finished: str = ""
    outputs: list = field(default_factory=list)

    def __post_init__(self):
        if not self.config_hash:
            self.config_hash = config_hash(self.config)
        if not self.backend:
            from ._accel import backend

            self.backend = backend()

    def finish(self):
        self.finished = _now()
        return self

    def to_dict(self):
        return to_jsonable(dataclasses.asdict(self))

    def write(self, path):
        write_json(path, self.to_dict())

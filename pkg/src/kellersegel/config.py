"""JSON run configuration.

Example::

    {
      "grid":    {"nx": 64, "ny": 64, "Lx": 6.283185307179586, "Ly": 6.283185307179586,
                  "bc": "periodic", "backend": "spectral"},
      "params":  {"chi": 1, "alpha": 1, "gamma": 1, "tau": 0, "cgn": 1.0},
      "time":    {"dt": 0.001, "n_steps": 1000},
      "initial": {"rho": {"gaussian": {"amplitude": 2, "x0": 3.14, "y0": 3.14, "sigma": 0.6}},
                  "c": null},
      "solver":  {"rel_tol": 1e-10, "max_iters": 500, "restart": 50},
      "output":  {"dir": "out", "diag_every": 1, "snapshot_every": 0}
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import CForbiddenWhenTauZero, SchemaError, TauRequiresC
from .grid import make_grid
from .linsolve import KrylovConfig
from .scheme import InitialCondition, ModelParams, RunConfig


@dataclass(frozen=True)
class OutputSettings:
    dir: str = "out"
    diag_every: int = 1
    snapshot_every: int = 0


_REQUIRED, _OPTIONAL = object(), object()

_SECTIONS = {
    "grid": {"nx": _REQUIRED, "ny": _REQUIRED, "Lx": _REQUIRED, "Ly": _REQUIRED,
             "bc": "periodic", "backend": "spectral"},
    "params": {"chi": _REQUIRED, "alpha": _REQUIRED, "gamma": _REQUIRED, "tau": _REQUIRED,
               "cgn": 1.0},
    "time": {"dt": _REQUIRED, "n_steps": _REQUIRED, "max_density": 1e8},
    "initial": {"rho": _REQUIRED, "c": None},
    "solver": {"rel_tol": 1e-10, "max_iters": 500, "restart": 50},
    "output": {"dir": "out", "diag_every": 1, "snapshot_every": 0},
}
_REQUIRED_SECTIONS = ("grid", "params", "time", "initial")

_INTS = {"grid.nx", "grid.ny", "time.n_steps", "solver.max_iters", "solver.restart",
         "output.diag_every", "output.snapshot_every"}
_STRINGS = {"grid.bc": ("periodic", "neumann"), "grid.backend": ("spectral", "fd")}

_IC_KEYS = {
    "constant": None,
    "gaussian": {"amplitude": _REQUIRED, "x0": _REQUIRED, "y0": _REQUIRED, "sigma": _REQUIRED,
                 "background": 0.0},
    "perturbed_constant": {"mean": _REQUIRED, "eps": _REQUIRED, "kx": _REQUIRED, "ky": _REQUIRED},
    "file": None,
}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_mapping(obj, path):
    if not isinstance(obj, dict):
        raise SchemaError(path or "<root>", "expected an object")


def _fill(obj, schema, path):
    _check_mapping(obj, path)
    for key in obj:
        if key not in schema:
            raise SchemaError(f"{path}.{key}" if path else key, "unknown key")
    out = {}
    for key, default in schema.items():
        where = f"{path}.{key}"
        if key in obj:
            out[key] = obj[key]
        elif default is _REQUIRED:
            raise SchemaError(where, "missing required key")
        else:
            out[key] = default
    return out


def _number(value, where):
    if not _is_number(value):
        raise SchemaError(where, f"expected a number, got {value!r}")
    return float(value)


def _initial(spec, where, base_dir):
    _check_mapping(spec, where)
    if len(spec) != 1:
        raise SchemaError(where, f"expected exactly one of {sorted(_IC_KEYS)}")
    (kind, body), = spec.items()
    if kind not in _IC_KEYS:
        raise SchemaError(f"{where}.{kind}", "unknown initial-condition kind")
    sub = f"{where}.{kind}"
    if kind == "constant":
        return InitialCondition.constant(_number(body, sub))
    if kind == "file":
        if not isinstance(body, str):
            raise SchemaError(sub, "expected a path string")
        path = Path(body)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return InitialCondition.from_file(path)
    values = _fill(body, _IC_KEYS[kind], sub)
    values = {k: _number(v, f"{sub}.{k}") for k, v in values.items()}
    if kind == "gaussian":
        return InitialCondition.gaussian(**values)
    return InitialCondition.perturbed_constant(**values)


def parse_document(data, base_dir=None):
    """Validate a config document; returns ``(RunConfig, OutputSettings)``.

    ``data`` may be bytes, str or an already-decoded dict. Relative ``file``
    paths resolve against ``base_dir``.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("", f"config is not UTF-8: {exc}") from exc
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError("", f"invalid JSON: {exc}") from exc
    _check_mapping(data, "")
    for key in data:
        if key not in _SECTIONS:
            raise SchemaError(key, "unknown section")
    for key in _REQUIRED_SECTIONS:
        if key not in data:
            raise SchemaError(key, "missing required section")

    doc = {name: _fill(data.get(name, {}), schema, name) for name, schema in _SECTIONS.items()}
    for section, schema in _SECTIONS.items():
        for key in schema:
            where = f"{section}.{key}"
            value = doc[section][key]
            if where in _INTS:
                if not isinstance(value, int) or isinstance(value, bool):
                    raise SchemaError(where, f"expected an integer, got {value!r}")
            elif where in _STRINGS:
                if value not in _STRINGS[where]:
                    raise SchemaError(where, f"expected one of {_STRINGS[where]}, got {value!r}")
            elif section not in ("initial", "output") and not _is_number(value):
                raise SchemaError(where, f"expected a number, got {value!r}")
    if not isinstance(doc["output"]["dir"], str):
        raise SchemaError("output.dir", "expected a string")

    g = doc["grid"]
    grid = make_grid(g["nx"], g["ny"], g["Lx"], g["Ly"], g["bc"], g["backend"])
    p = doc["params"]
    params = ModelParams(chi=float(p["chi"]), alpha=float(p["alpha"]), gamma=float(p["gamma"]),
                         tau=float(p["tau"]), cgn=float(p["cgn"]))

    init = doc["initial"]
    rho = _initial(init["rho"], "initial.rho", base_dir)
    c_spec = init["c"]
    if params.tau == 0 and c_spec is not None:
        raise CForbiddenWhenTauZero("initial.c", "c forbidden when tau=0")
    if params.tau > 0 and c_spec is None:
        raise TauRequiresC("initial.c", "tau > 0 requires an initial concentration")
    c = _initial(c_spec, "initial.c", base_dir) if c_spec is not None else None

    s = doc["solver"]
    solver = KrylovConfig(rel_tol=float(s["rel_tol"]), max_iters=s["max_iters"], restart=s["restart"])
    o = doc["output"]
    if o["snapshot_every"] < 0:
        raise SchemaError("output.snapshot_every", "must be >= 0")
    t = doc["time"]
    cfg = RunConfig(
        params=params, dt=float(t["dt"]), n_steps=t["n_steps"], grid=grid, initial_rho=rho,
        initial_c=c, solver=solver, diag_every=o["diag_every"],
        max_density=float(t["max_density"]),
    )
    return cfg, OutputSettings(o["dir"], o["diag_every"], o["snapshot_every"])


def parse_config(data, base_dir=None) -> RunConfig:
    return parse_document(data, base_dir)[0]


def load_config(path):
    """Read and validate ``path``; returns ``(RunConfig, OutputSettings)``."""
    path = Path(path)
    return parse_document(path.read_bytes(), base_dir=path.parent)

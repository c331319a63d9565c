"""Versioned JSON problem configuration and its translation into a SystemSpec."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .builtins import BUILTINS
from .errors import ConfigParse
from .expr import ExpressionError, vector_function
from .flow import ImpulseSchedule, VolterraProblem
from .solver import PicardConfig
from .system import SystemSpec

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema", "name", "description", "n", "A", "omega", "rho", "impulses", "nonlinearity",
             "solver", "nu", "seed", "constants", "oracle"}
_SOLVER_KEYS = {"tol", "max_iter", "grid", "quad_nodes", "volterra_arg", "max_refine"}


@dataclass
class ProblemConfig:
    n: int
    A: np.ndarray
    omega: float
    rho: np.ndarray
    impulses: list[dict]
    nonlinearity: dict
    solver: dict = field(default_factory=dict)
    nu: float = 10.0
    seed: int = 0
    name: str = ""
    constants: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _fail(path: str, msg: str):
    raise ConfigParse(f"{path}: {msg}")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {type(value).__name__}")
    if not np.isfinite(value):
        _fail(path, "must be finite")
    return float(value)


def _matrix(value, n: int, path: str) -> np.ndarray:
    if n == 1 and isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [[value]]
    if not isinstance(value, list) or len(value) != n:
        _fail(path, f"expected {n} rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            _fail(f"{path}[{i}]", f"expected {n} entries")
        rows.append([_number(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    return np.array(rows, dtype=float)


def _vector(value, n: int, path: str) -> np.ndarray:
    if n == 1 and isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or len(value) != n:
        _fail(path, f"expected a list of {n} numbers")
    return np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(value)], dtype=float)


def parse_config(obj: Any) -> ProblemConfig:
    """Validate a decoded JSON object; errors name the offending field."""
    if not isinstance(obj, dict):
        _fail("$", "top level must be an object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        _fail("$", f"unknown keys {sorted(unknown)}")
    if obj.get("schema") != SCHEMA_VERSION:
        _fail("schema", f"expected {SCHEMA_VERSION}, got {obj.get('schema')!r}")
    n = obj.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        _fail("n", "must be a positive integer")
    omega = _number(obj.get("omega"), "omega")
    if omega <= 0:
        _fail("omega", "must be positive")
    A = _matrix(obj.get("A"), n, "A")
    rho = _matrix(obj.get("rho"), n, "rho")
    impulses = obj.get("impulses", [])
    if not isinstance(impulses, list):
        _fail("impulses", "must be a list")
    parsed = []
    for k, imp in enumerate(impulses):
        p = f"impulses[{k}]"
        if not isinstance(imp, dict) or set(imp) - {"tau", "B", "d"}:
            _fail(p, "must be an object with keys tau, B, d")
        parsed.append({"tau": _number(imp.get("tau"), f"{p}.tau"),
                       "B": _matrix(imp.get("B", [[0.0] * n] * n), n, f"{p}.B"),
                       "d": _vector(imp.get("d", [0.0] * n), n, f"{p}.d")})
    nl = obj.get("nonlinearity", {"kind": "none"})
    if not isinstance(nl, dict) or nl.get("kind") not in ("none", "builtin", "polynomial", "expression"):
        _fail("nonlinearity.kind", "must be one of none, builtin, polynomial, expression")
    solver = obj.get("solver", {})
    if not isinstance(solver, dict) or set(solver) - _SOLVER_KEYS:
        _fail("solver", f"allowed keys are {sorted(_SOLVER_KEYS)}")
    if solver.get("volterra_arg", "at_t") not in ("at_t", "at_s"):
        _fail("solver.volterra_arg", "must be at_t or at_s")
    constants = obj.get("constants", {})
    if not isinstance(constants, dict) or set(constants) - {"lipschitz_f", "lipschitz_g", "alpha", "beta"}:
        _fail("constants", "allowed keys are lipschitz_f, lipschitz_g, alpha, beta")
    for key, value in constants.items():
        _number(value, f"constants.{key}")
    nu = _number(obj.get("nu", 10.0), "nu")
    if nu <= 0:
        _fail("nu", "must be positive")
    seed = obj.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        _fail("seed", "must be a nonnegative integer")
    return ProblemConfig(n=n, A=A, omega=omega, rho=rho, impulses=parsed, nonlinearity=nl,
                         solver=solver, nu=nu, seed=seed, name=str(obj.get("name", "")),
                         constants=constants, raw=copy.deepcopy(obj))


def load_config(path) -> ProblemConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(obj)


def _schedule(cfg: ProblemConfig) -> ImpulseSchedule:
    inside = [imp for imp in cfg.impulses if imp["tau"] < cfg.omega]
    declared = [(imp["tau"], imp["B"], imp["d"]) for imp in cfg.impulses if imp["tau"] >= cfg.omega]
    inside.sort(key=lambda imp: imp["tau"])
    try:
        return ImpulseSchedule(cfg.omega, [i["tau"] for i in inside], [i["B"] for i in inside],
                               [i["d"] for i in inside], cfg.rho, declared)
    except Exception as exc:
        raise ConfigParse(f"impulses: {exc}") from exc


def _polynomial(spec: dict, n: int, path: str):
    if not isinstance(spec, dict) or set(spec) - {"const", "y", "z", "yy"}:
        _fail(path, "allowed keys are const, y, z, yy")
    const = _vector(spec.get("const", [0.0] * n), n, f"{path}.const")
    Y = _matrix(spec.get("y", [[0.0] * n] * n), n, f"{path}.y")
    Z = _matrix(spec.get("z", [[0.0] * n] * n), n, f"{path}.z")
    raw = spec.get("yy")
    if raw is None:
        YY = np.zeros((n, n, n))
    else:
        if not isinstance(raw, list) or len(raw) != n:
            _fail(f"{path}.yy", f"expected {n} matrices")
        YY = np.stack([_matrix(m, n, f"{path}.yy[{i}]") for i, m in enumerate(raw)])
    return const, Y, Z, YY


def build_problem(cfg: ProblemConfig):
    """``(problem, forcing)``: exactly one of them is None."""
    nl, n = cfg.nonlinearity, cfg.n
    arg = cfg.solver.get("volterra_arg", "at_t")
    consts = cfg.constants
    kind = nl["kind"]
    try:
        if kind == "none":
            exprs = nl.get("forcing")
            if exprs is None:
                return None, None
            fn = vector_function(exprs if isinstance(exprs, list) else [exprs], n, ["t"], with_z=False)
            return None, (lambda t: fn(t, np.zeros(n)))
        if kind == "builtin":
            name = nl.get("name")
            if name not in BUILTINS:
                _fail("nonlinearity.name", f"unknown builtin {name!r}; known: {sorted(BUILTINS)}")
            params = nl.get("params", {})
            if not isinstance(params, dict):
                _fail("nonlinearity.params", "must be an object")
            try:
                prob = BUILTINS[name](n, cfg.omega, cfg.rho, params)
            except (ValueError, TypeError) as exc:
                _fail("nonlinearity.params", str(exc))
            return _with(prob, arg, {}), None
        if kind == "polynomial":
            c, Y, Z, YY = _polynomial(nl.get("f", {}), n, "nonlinearity.f")
            gspec = nl.get("g")

            def f(t, y, z):
                y = np.asarray(y, dtype=float)
                return c + Y @ y + Z @ np.asarray(z, dtype=float) + np.einsum("ijk,j,k->i", YY, y, y)

            g = None
            if gspec is not None:
                gc, GY, _, _ = _polynomial(gspec, n, "nonlinearity.g")

                def g(t, s, y):
                    return gc + GY @ np.asarray(y, dtype=float)

            return _with(VolterraProblem(f=f, g=g, name="polynomial"), arg, consts), None
        # expression
        f = vector_function(nl.get("f"), n, ["t"], with_z=True)
        g = None
        if nl.get("g") is not None:
            g = vector_function(nl.get("g"), n, ["t", "s"], with_z=False)
        return _with(VolterraProblem(f=f, g=g, name="expression"), arg, consts), None
    except ExpressionError as exc:
        raise ConfigParse(f"nonlinearity: {exc}") from exc


def _with(prob: VolterraProblem, arg: str, consts: dict) -> VolterraProblem:
    from dataclasses import replace
    kw = {"volterra_arg": arg}
    for key, attr in (("lipschitz_f", "lipschitz_f"), ("lipschitz_g", "lipschitz_g"),
                      ("alpha", "growth_alpha"), ("beta", "growth_beta")):
        if key in consts:
            kw[attr] = float(consts[key])
    return replace(prob, **kw)


def build_system(cfg: ProblemConfig) -> SystemSpec:
    problem, forcing = build_problem(cfg)
    return SystemSpec(cfg.A, _schedule(cfg), problem, forcing, cfg.name)


def picard_config(cfg: ProblemConfig) -> PicardConfig:
    s = cfg.solver
    try:
        return PicardConfig(tol=float(s.get("tol", 1e-10)), max_iter=int(s.get("max_iter", 200)),
                            grid=int(s.get("grid", 4)), quad_nodes=int(s.get("quad_nodes", 8)),
                            max_refine=int(s.get("max_refine", 4)), nu=cfg.nu)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"solver: {exc}") from exc


def system_from_dict(obj: dict) -> SystemSpec:
    return build_system(parse_config(obj))

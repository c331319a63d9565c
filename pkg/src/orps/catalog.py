"""Named example problems with their known answers embedded under ``oracle``.

Every entry is a schema-1 configuration dict, so ``orps solve --problem NAME`` and the
tests go through the ordinary parsing path.
"""
from __future__ import annotations

import copy
import math

import numpy as np

from .corpus import commuting_family

_LAMBDA = 2.0 * math.log(2.0)

_ENTRIES: dict[str, dict] = {
    "scalar-rho2-forced": {
        "schema": 1, "name": "scalar-rho2-forced",
        "description": "y' = 1, y(1) = 2 y(0); the solution is y(t) = 1 + t",
        "n": 1, "A": [[0.0]], "omega": 1.0, "rho": [[2.0]], "impulses": [],
        "nonlinearity": {"kind": "none", "forcing": ["1"]},
        "oracle": {"solution": "1 + t", "y0": [1.0], "C2": 2.0, "C2_numeric": 2.0, "C1": 0.0},
    },
    "scalar-impulse": {
        "schema": 1, "name": "scalar-impulse",
        "description": "y' = 0 with one jump y+ = 2y + 1 at t = 0.5, y(1) = 3 y(0)",
        "n": 1, "A": [[0.0]], "omega": 1.0, "rho": [[3.0]],
        "impulses": [{"tau": 0.5, "B": [[1.0]], "d": [1.0]}],
        "nonlinearity": {"kind": "none"},
        "oracle": {"y0": [1.0], "y_after": [3.0], "C1": 8.0},
    },
    "volterra-gauss": {
        "schema": 1, "name": "volterra-gauss",
        "description": "y' = z, z(t) = int_0^t lambda y(t) ds, so y(t) = y0 exp(lambda t^2 / 2)",
        "n": 1, "A": [[0.0]], "omega": 1.0, "rho": [[2.0]], "impulses": [],
        "nonlinearity": {"kind": "expression", "f": ["z1"], "g": [f"{_LAMBDA!r}*y1"]},
        "solver": {"volterra_arg": "at_t"},
        "oracle": {"lambda": _LAMBDA, "y0": [1.0], "y_omega": [2.0]},
    },
    "gap-singular": {
        "schema": 1, "name": "gap-singular",
        "description": "rho = E with A = 0 and no impulses: the monodromy gap vanishes",
        "n": 1, "A": [[0.0]], "omega": 1.0, "rho": [[1.0]], "impulses": [],
        "nonlinearity": {"kind": "none"},
        "oracle": {"failed": ["A4"]},
    },
    "sine-contractive": {
        "schema": 1, "name": "sine-contractive",
        "description": "scalar a = -1 with the scaled sine nonlinearity and rho = 1.5",
        "n": 1, "A": [[-1.0]], "omega": 1.0, "rho": [[1.5]],
        "impulses": [{"tau": 0.4, "B": [[0.2]], "d": [0.5]}],
        "nonlinearity": {"kind": "builtin", "name": "scaled_sine",
                         "params": {"eps": 0.1, "K": [[1.0]], "W": [[0.5]], "p": 0.2,
                                    "b0": [0.3], "b1": [1.0]}},
        "solver": {"tol": 1e-10},
        "nu": 100.0,
    },
    "m0": {
        "schema": 1, "name": "m0",
        "description": "two-dimensional damped rotation without impulses",
        "n": 2, "A": [[-0.5, 1.0], [-1.0, -0.5]], "omega": 2.0, "rho": [[1.5, 0.0], [0.0, 1.5]],
        "impulses": [],
        "nonlinearity": {"kind": "none", "forcing": ["sin(pi*t)", "1"]},
        "oracle": {"C1": 0.0},
    },
}


def _commuting() -> dict:
    cfg = commuting_family(np.random.default_rng(20240611), n=3, m=2, omega=1.0, branch="neg")
    cfg["name"] = "commuting-family"
    cfg["description"] = "A, B_k and rho are polynomials in one matrix"
    return cfg


_FACTORIES = {"commuting-family": _commuting}


def names() -> list[str]:
    return sorted(set(_ENTRIES) | set(_FACTORIES))


def get(name: str) -> dict:
    """A fresh copy of the configuration called ``name``."""
    if name in _ENTRIES:
        return copy.deepcopy(_ENTRIES[name])
    if name in _FACTORIES:
        return _FACTORIES[name]()
    raise KeyError(f"unknown catalog problem {name!r}; known: {names()}")

"""Trajectory CSV and deterministic JSON output.

Floats are written with ``repr`` (shortest round-trip decimal), so files are
byte-identical across runs and read back without loss.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch
from .flow import PiecewiseTrajectory, sampled_trajectory

SIDES = ("L", "R", "-")


def _fmt(x: float) -> str:
    return repr(float(x))


def trajectory_header(n: int) -> list[str]:
    return ["t", "side"] + [f"y_{i}" for i in range(1, n + 1)]


def write_trajectory_csv(traj: PiecewiseTrajectory, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj.n))
        for t, side, y in traj.rows():
            w.writerow([_fmt(t), side] + [_fmt(v) for v in y])


def read_trajectory_csv(path, n: int | None = None) -> PiecewiseTrajectory:
    """Inverse of :func:`write_trajectory_csv`; malformed files raise SchemaMismatch."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaMismatch(f"{path}: empty file")
    head = rows[0]
    width = len(head) - 2
    if width < 1 or head != trajectory_header(width):
        raise SchemaMismatch(f"{path}: header must be t,side,y_1..y_n, got {','.join(head)}")
    if n is not None and width != n:
        raise SchemaMismatch(f"{path}: expected {n} state columns, found {width}")
    times, states, prev_side = [], [], None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(head):
            raise SchemaMismatch(f"{path} line {lineno}: expected {len(head)} fields, got {len(row)}")
        try:
            t = float(row[0])
            y = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise SchemaMismatch(f"{path} line {lineno}: {exc}") from exc
        side = row[1]
        if side not in SIDES:
            raise SchemaMismatch(f"{path} line {lineno}: side must be one of L, R, -")
        if not (math.isfinite(t) and all(math.isfinite(v) for v in y)):
            raise SchemaMismatch(f"{path} line {lineno}: non-finite value")
        if times:
            if side == "R":
                if prev_side != "L" or t != times[-1]:
                    raise SchemaMismatch(f"{path} line {lineno}: R row must follow an L row at the same time")
            elif prev_side == "L" or t <= times[-1]:
                raise SchemaMismatch(f"{path} line {lineno}: times must increase")
        elif side == "R":
            raise SchemaMismatch(f"{path} line {lineno}: trajectory cannot start with an R row")
        times.append(t)
        states.append(y)
        prev_side = side
    if prev_side == "L":
        raise SchemaMismatch(f"{path}: trailing L row without its R row")
    if len(times) < 2:
        raise SchemaMismatch(f"{path}: need at least two samples")
    return sampled_trajectory(np.array(times), np.array(states))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")

"""A small side-effect-free expression language for configuration files.

Allowed: numbers, ``pi``, the variables passed in (``t``, ``s``, ``y1..yn``, ``z1..zn``),
``+ - * /``, unary minus, parentheses and the functions ``sin``, ``cos``, ``exp``.
Expressions are parsed with :mod:`ast` and compiled to closures; nothing is evaluated
through ``eval``.
"""
from __future__ import annotations

import ast
import math
import operator
from typing import Callable, Iterable

import numpy as np

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_CONSTS = {"pi": math.pi}


class ExpressionError(ValueError):
    pass


def _compile(node: ast.AST, names: dict[str, int]) -> Callable:
    if isinstance(node, ast.Expression):
        return _compile(node.body, names)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda env: value
    if isinstance(node, ast.Name):
        if node.id in names:
            idx = names[node.id]
            return lambda env: env[idx]
        if node.id in _CONSTS:
            value = _CONSTS[node.id]
            return lambda env: value
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, names), _compile(node.right, names)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op = _UNARY[type(node.op)]
        inner = _compile(node.operand, names)
        return lambda env: op(inner(env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        fn = _FUNCS[node.func.id]
        arg = _compile(node.args[0], names)
        return lambda env: fn(arg(env))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def compile_expression(src: str, variables: Iterable[str]) -> Callable[[list], float]:
    """Compile ``src``; the result takes the variable values in the order of ``variables``."""
    if not isinstance(src, (str, int, float)) or isinstance(src, bool):
        raise ExpressionError(f"expression must be a string or number, got {type(src).__name__}")
    try:
        tree = ast.parse(str(src), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error in {src!r}: {exc.msg}") from exc
    names = {name: i for i, name in enumerate(variables)}
    return _compile(tree, names)


def state_names(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def vector_function(exprs, n: int, leading: list[str], with_z: bool):
    """Vector-valued callable of ``(*leading, y)`` or ``(*leading, y, z)`` from n expressions."""
    if not isinstance(exprs, list) or len(exprs) != n:
        raise ExpressionError(f"expected a list of {n} expressions")
    variables = leading + state_names("y", n) + (state_names("z", n) if with_z else [])
    comps = [compile_expression(e, variables) for e in exprs]
    k = len(leading)

    def fn(*args):
        env = [float(a) for a in args[:k]]
        env += [float(v) for v in np.asarray(args[k], dtype=float).reshape(n)]
        if with_z:
            env += [float(v) for v in np.asarray(args[k + 1], dtype=float).reshape(n)]
        return np.array([c(env) for c in comps])

    return fn

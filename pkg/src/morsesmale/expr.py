"""Small arithmetic expression evaluator for map configuration files.

Expressions are parsed with :mod:`ast` and only a whitelist of node types,
names and functions is accepted.  Evaluation is vectorized through numpy, so
``x1`` and ``x2`` may be arrays.
"""
from __future__ import annotations

import ast
import operator
from typing import Mapping

import numpy as np

from .errors import ConfigError

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "tanh": np.tanh, "sinh": np.sinh, "cosh": np.cosh,
    "arctan": np.arctan, "atan2": np.arctan2, "abs": np.abs,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class Expression:
    def __init__(self, source: str, variables=("x1", "x2")):
        self.source = source
        self.variables = tuple(variables)
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS) or node.keywords:
                raise ConfigError(f"function not allowed in {self.source!r}")
            for a in node.args:
                self._check(a)
        elif isinstance(node, ast.Name):
            pass
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        else:
            raise ConfigError(f"unsupported syntax {type(node).__name__} in {self.source!r}")

    def __call__(self, env: Mapping[str, object]):
        return self._eval(self._tree, env)

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](*(self._eval(a, env) for a in node.args))
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ConfigError(f"unknown name {node.id!r} in {self.source!r}")
        return float(node.value)


def compile_component_map(components: list[str], params: Mapping[str, float] | None = None):
    """Turn two expression strings into a vectorized ``(N, 2) -> (N, 2)`` function."""
    if len(components) != 2:
        raise ConfigError("a chart map needs exactly two component expressions")
    exprs = [Expression(c) for c in components]
    params = dict(params or {})

    def fn(xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        env = dict(params, x1=xy[:, 0], x2=xy[:, 1])
        cols = [np.broadcast_to(np.asarray(e(env), dtype=float), (len(xy),)) for e in exprs]
        return np.stack(cols, axis=-1)

    return fn

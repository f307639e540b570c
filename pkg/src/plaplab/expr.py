"""A tiny arithmetic expression language for sigma, f and u0 in configs.

Grammar: numbers, the variables allowed by the caller, ``+ - * / **``,
unary minus, parentheses, ``exp(.)`` and ``sin(.)``. Expressions are parsed
with :mod:`ast`, checked against that whitelist, and compiled once.
"""
from __future__ import annotations

import ast

import numpy as np

_FUNCS = {"exp": np.exp, "sin": np.sin}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNOPS = (ast.UAdd, ast.USub)


class ExpressionError(ValueError):
    pass


def _check(node, variables):
    if isinstance(node, ast.Expression):
        return _check(node.body, variables)
    if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _UNOPS):
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ExpressionError("only exp(...) and sin(...) may be called")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables:
            raise ExpressionError(f"unknown name {node.id!r} (allowed: {', '.join(sorted(variables))})")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"bad constant {node.value!r}")
    else:
        raise ExpressionError(f"unsupported syntax: {type(node).__name__}")


class Expression:
    """Compiled expression in the given variables, evaluated with numpy."""

    def __init__(self, text: str, variables=("x", "t")):
        self.text = text
        self.variables = tuple(variables)
        try:
            tree = ast.parse(text.strip(), mode="eval")
        except SyntaxError as e:
            raise ExpressionError(f"cannot parse {text!r}: {e.msg}") from None
        _check(tree, set(self.variables))
        self._code = compile(tree, "<expr>", "eval")

    def __call__(self, **values):
        env = {"__builtins__": {}, **_FUNCS, **values}
        with np.errstate(over="ignore"):
            return eval(self._code, env)  # noqa: S307 - whitelisted AST

    def __repr__(self):
        return f"Expression({self.text!r})"


class VertexTimeExpression:
    """sigma(x, t) from an expression in the vertex index ``x`` and ``t``.

    ``x`` is the position of the vertex in the graph's canonical order.
    Accepts one vertex id or a sequence of ids (vectorized).
    """

    vectorized = True

    def __init__(self, text: str, vertices):
        self.expr = Expression(text, ("x", "t"))
        self.index = {v: i for i, v in enumerate(vertices)}

    def __call__(self, x, t):
        if isinstance(x, (tuple, list)):
            xi = np.array([self.index[v] for v in x], dtype=float)
            return np.broadcast_to(np.asarray(self.expr(x=xi, t=float(t)), dtype=float), xi.shape)
        return float(self.expr(x=float(self.index[x]), t=float(t)))


class ScalarExpression:
    """f(s) from an expression in ``s``."""

    def __init__(self, text: str):
        self.expr = Expression(text, ("s",))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.broadcast_to(np.asarray(self.expr(s=s), dtype=float), s.shape)
        return float(out) if out.ndim == 0 else out.copy()

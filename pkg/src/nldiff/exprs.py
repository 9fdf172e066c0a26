"""Minimal arithmetic expression grammar for user-defined models.

Supported: literals, the variables x, y and theta (theta is an alias for
x, for circle models), + - * / and ^ (power), abs, exp, ln/log, sqrt,
cos, sin, the constants pi and e, and indicator(lo, hi, expr), which
evaluates to 1 where lo < expr < hi and 0 elsewhere (piecewise functions
are sums of indicator products).  No user-extensible functions, no
attribute access, nothing else.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .errors import ConfigError

_FUNCS = {
    "abs": np.abs,
    "exp": np.exp,
    "ln": np.log,
    "log": np.log,
    "sqrt": np.sqrt,
    "cos": np.cos,
    "sin": np.sin,
}

_CONSTS = {"pi": math.pi, "e": math.e}

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_ALLOWED_UNARY = (ast.UAdd, ast.USub)


def _indicator(lo, hi, val):
    return np.where((val > lo) & (val < hi), 1.0, 0.0)


def _validate(node, names, text):
    if isinstance(node, ast.Expression):
        _validate(node.body, names, text)
    elif isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
        _validate(node.left, names, text)
        _validate(node.right, names, text)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _ALLOWED_UNARY):
        _validate(node.operand, names, text)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        pass
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in _CONSTS:
            raise ConfigError(f"unknown name {node.id!r} in expression {text!r}")
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name):
            raise ConfigError(f"only plain function calls allowed in {text!r}")
        fname = node.func.id
        if fname == "indicator":
            if len(node.args) != 3 or node.keywords:
                raise ConfigError(f"indicator takes exactly (lo, hi, expr) in {text!r}")
        elif fname in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise ConfigError(f"{fname} takes exactly one argument in {text!r}")
        else:
            raise ConfigError(f"unknown function {fname!r} in expression {text!r}")
        for arg in node.args:
            _validate(arg, names, text)
    else:
        raise ConfigError(
            f"disallowed syntax {type(node).__name__} in expression {text!r}")


def compile_expression(text, variables=("x",)):
    """Compile an expression string into a vectorized function of the
    given variables.  theta is accepted as an alias wherever x is."""
    if not isinstance(text, str) or not text.strip():
        raise ConfigError(f"expression must be a nonempty string, got {text!r}")
    src = text.replace("^", "**")
    names = set(variables)
    if "x" in names:
        names.add("theta")
        names.add("θ")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    _validate(tree, names, text)
    code = compile(tree, "<expression>", "eval")
    env = dict(_FUNCS)
    env.update(_CONSTS)
    env["indicator"] = _indicator

    if "y" in variables:
        def fn(x, y):
            local = dict(env)
            local["x"] = x
            local["theta"] = local["θ"] = x
            local["y"] = y
            out = eval(code, {"__builtins__": {}}, local)
            return np.broadcast_to(np.asarray(out, dtype=float),
                                   np.broadcast(x, y).shape).copy()
    else:
        def fn(x):
            local = dict(env)
            local["x"] = x
            local["theta"] = local["θ"] = x
            out = eval(code, {"__builtins__": {}}, local)
            return np.broadcast_to(np.asarray(out, dtype=float),
                                   np.asarray(x).shape).copy()
    return fn

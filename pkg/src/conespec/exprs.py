"""Tiny safe arithmetic expression evaluator for operator and config files.

Supports +, -, *, /, ** (also '^'), parentheses, numeric literals, the
variables ``m`` (mode number) and ``x`` (radial variable), and the
functions sin, cos, exp, log, sqrt, abs.  Anything else is rejected at
parse time, so untrusted files cannot execute code.
"""

import ast

import numpy as np

from .errors import ConfigurationError

_ALLOWED_FUNCS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs,
}
_ALLOWED_NAMES = {"m", "x", "pi"}

_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name,
    ast.Call, ast.Load, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow,
    ast.USub, ast.UAdd,
)


def _validate(node, source):
    if not isinstance(node, _ALLOWED_NODES):
        raise ConfigurationError("disallowed syntax in expression",
                                 expression=source,
                                 node=type(node).__name__)
    if isinstance(node, ast.Name) and node.id not in _ALLOWED_NAMES \
            and node.id not in _ALLOWED_FUNCS:
        raise ConfigurationError("unknown name in expression",
                                 expression=source, name=node.id)
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_FUNCS:
            raise ConfigurationError("unknown function in expression",
                                     expression=source)
        if node.keywords:
            raise ConfigurationError("keyword arguments not allowed",
                                     expression=source)
    if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
        raise ConfigurationError("only numeric literals allowed",
                                 expression=source)
    for child in ast.iter_child_nodes(node):
        _validate(child, source)


def compile_expr(source):
    """Compile an expression string to a callable f(m, x)."""
    text = source.replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError("cannot parse expression",
                                 expression=source) from exc
    _validate(tree, source)
    code = compile(tree, "<expr>", "eval")
    env = dict(_ALLOWED_FUNCS)
    env["pi"] = np.pi

    def fn(m, x):
        scope = dict(env)
        scope["m"] = m
        scope["x"] = x
        return eval(code, {"__builtins__": {}}, scope)  # noqa: S307 (validated AST)

    fn.source = source
    return fn

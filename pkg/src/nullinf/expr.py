"""Small closed expression grammar for metric perturbation coefficients.

Allowed: numbers, the variables rho and x (aliases rho0, rhoplus, x_I, xI),
binary + - * / **, unary minus, and bump(var, a, b), a smooth bump equal to 1
at the midpoint of (a, b) and vanishing to infinite order at the ends.
Division is only allowed by a numeric constant.
"""

import ast

import numpy as np

from .errors import ConfigError

ALIASES = {
    "rho": "rho", "rho0": "rho", "rhoplus": "rho", "rho_plus": "rho",
    "x": "x", "x_I": "x", "xI": "x",
}


def bump(s, a, b):
    s = np.asarray(s, dtype=float)
    z = (2.0 * s - (a + b)) / (b - a)
    out = np.zeros_like(s)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
    return out if out.ndim else float(out)


def _check(node, src):
    if isinstance(node, ast.Expression):
        return _check(node.body, src)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return
    if isinstance(node, ast.Name):
        if node.id not in ALIASES:
            raise ConfigError(f"unknown variable {node.id!r} in {src!r}")
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _check(node.operand, src)
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Pow)):
            _check(node.left, src)
            return _check(node.right, src)
        if isinstance(node.op, ast.Div):
            if not _is_constant(node.right):
                raise ConfigError(f"division only by constants in {src!r}")
            _check(node.left, src)
            return
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "bump":
        if len(node.args) != 3 or node.keywords:
            raise ConfigError(f"bump takes (var, a, b) in {src!r}")
        if not isinstance(node.args[0], ast.Name):
            raise ConfigError(f"bump needs a variable first in {src!r}")
        _check(node.args[0], src)
        for a in node.args[1:]:
            if not _is_constant(a):
                raise ConfigError(f"bump limits must be constants in {src!r}")
        return
    raise ConfigError(f"unsupported syntax {type(node).__name__} in {src!r}")


def _is_constant(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return True
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _is_constant(node.operand)
    if isinstance(node, ast.BinOp):
        return _is_constant(node.left) and _is_constant(node.right)
    return False


class Expr:
    """Compiled coefficient expression, callable as f(rho, x)."""

    def __init__(self, src):
        self.src = str(src).strip()
        try:
            tree = ast.parse(self.src, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {self.src!r}: {exc.msg}") from None
        _check(tree, self.src)
        self._code = compile(tree, "<expr>", "eval")

    def __call__(self, rho, x):
        env = {k: (rho if v == "rho" else x) for k, v in ALIASES.items()}
        env["bump"] = bump
        return eval(self._code, {"__builtins__": {}}, env)

    def __repr__(self):
        return f"Expr({self.src!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and other.src == self.src

    def __hash__(self):
        return hash(self.src)

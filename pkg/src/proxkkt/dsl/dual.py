"""Second-order forward-mode arithmetic.

A :class:`Dual2` carries a value together with its exact gradient and Hessian
with respect to the ``n`` input variables. Propagating it through an
expression tree yields ``(f, f', f'')`` without finite differences.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EvaluationFailure
from .parser import Call, Const, Expr, Neg, Var, max_variable

_MAX_INT_EXPONENT = 1 << 20


class Dual2:
    __slots__ = ("v", "g", "H")

    def __init__(self, v: float, g: np.ndarray, H: np.ndarray):
        self.v = v
        self.g = g
        self.H = H

    @classmethod
    def constant(cls, c: float, n: int) -> "Dual2":
        return cls(float(c), np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variable(cls, x: np.ndarray, i: int) -> "Dual2":
        """The ``i``-th coordinate (0-based) of the point ``x``."""
        n = x.size
        g = np.zeros(n)
        g[i] = 1.0
        return cls(float(x[i]), g, np.zeros((n, n)))

    def __add__(self, o: "Dual2") -> "Dual2":
        return Dual2(self.v + o.v, self.g + o.g, self.H + o.H)

    def __sub__(self, o: "Dual2") -> "Dual2":
        return Dual2(self.v - o.v, self.g - o.g, self.H - o.H)

    def __neg__(self) -> "Dual2":
        return Dual2(-self.v, -self.g, -self.H)

    def __mul__(self, o: "Dual2") -> "Dual2":
        cross = np.outer(self.g, o.g)
        return Dual2(
            self.v * o.v,
            self.g * o.v + o.g * self.v,
            self.H * o.v + cross + cross.T + o.H * self.v,
        )

    def __truediv__(self, o: "Dual2") -> "Dual2":
        return self * o.reciprocal()

    def chain(self, d0: float, d1: float, d2: float) -> "Dual2":
        """Apply a scalar function with value d0 and derivatives d1, d2 at ``self.v``."""
        return Dual2(d0, d1 * self.g, d1 * self.H + d2 * np.outer(self.g, self.g))

    def reciprocal(self) -> "Dual2":
        u = self.v
        if u == 0.0:
            raise EvaluationFailure("expression", reason="division by zero")
        return self.chain(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u))

    def int_power(self, k: int) -> "Dual2":
        if k < 0:
            if self.v == 0.0:
                raise EvaluationFailure("expression", reason="0 raised to a negative power")
            return self.int_power(-k).reciprocal()
        n = self.g.size
        result = Dual2.constant(1.0, n)
        base = self
        first = True
        while k:
            if k & 1:
                result = base if first else result * base
                first = False
            k >>= 1
            if k:
                base = base * base
        return result

    def real_power(self, c: float) -> "Dual2":
        u = self.v
        if not u > 0.0:
            raise EvaluationFailure("expression", reason="non-integer power of a non-positive base")
        return self.chain(u**c, c * u ** (c - 1.0), c * (c - 1.0) * u ** (c - 2.0))

    def __repr__(self) -> str:
        return f"Dual2(v={self.v!r}, g={self.g!r}, H={self.H!r})"


def _apply(name: str, u: Dual2) -> Dual2:
    a = u.v
    if name == "sin":
        s, c = math.sin(a), math.cos(a)
        return u.chain(s, c, -s)
    if name == "cos":
        s, c = math.sin(a), math.cos(a)
        return u.chain(c, -s, -c)
    if name == "exp":
        try:
            e = math.exp(a)
        except OverflowError:
            raise EvaluationFailure("expression", reason="exp overflow") from None
        return u.chain(e, e, e)
    if name == "log":
        if not a > 0.0:
            raise EvaluationFailure("expression", reason="log of a non-positive argument")
        return u.chain(math.log(a), 1.0 / a, -1.0 / (a * a))
    if name == "sqrt":
        if not a > 0.0:
            raise EvaluationFailure("expression", reason="sqrt of a non-positive argument")
        r = math.sqrt(a)
        return u.chain(r, 0.5 / r, -0.25 / (r * a))
    raise EvaluationFailure("expression", reason=f"unknown function {name!r}")


def integer_exponent(node: Expr) -> int | None:
    if isinstance(node, Const) and float(node.value).is_integer() and abs(node.value) <= _MAX_INT_EXPONENT:
        return int(node.value)
    if isinstance(node, Neg):
        k = integer_exponent(node.operand)
        return None if k is None else -k
    return None


def propagate(node: Expr, x: np.ndarray) -> Dual2:
    n = x.size
    if isinstance(node, Const):
        return Dual2.constant(node.value, n)
    if isinstance(node, Var):
        return Dual2.variable(x, node.index - 1)
    if isinstance(node, Neg):
        return -propagate(node.operand, x)
    if isinstance(node, Call):
        return _apply(node.name, propagate(node.arg, x))
    left = propagate(node.left, x)
    if node.op == "^":
        k = integer_exponent(node.right)
        if k is not None:
            return left.int_power(k)
        if isinstance(node.right, Const):
            return left.real_power(float(node.right.value))
        if not left.v > 0.0:
            raise EvaluationFailure("expression", reason="non-integer power of a non-positive base")
        return _apply("exp", propagate(node.right, x) * _apply("log", left))
    right = propagate(node.right, x)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    return left / right


def eval_with_derivatives(ast: Expr, x) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact value, gradient and (symmetrized) Hessian of ``ast`` at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if max_variable(ast) > x.size:
        raise ValueError(f"expression uses x{max_variable(ast)} but the point has dimension {x.size}")
    try:
        d = propagate(ast, x)
    except (OverflowError, ZeroDivisionError) as exc:
        raise EvaluationFailure("expression", x, str(exc)) from exc
    H = 0.5 * (d.H + d.H.T)
    if not (math.isfinite(d.v) and np.all(np.isfinite(d.g)) and np.all(np.isfinite(H))):
        raise EvaluationFailure("expression", x, "non-finite result")
    return d.v, d.g, H


def _np_int_power(a, k: int):
    if k < 0:
        if np.any(a == 0.0):
            raise EvaluationFailure("expression", reason="0 raised to a negative power")
        return 1.0 / _np_int_power(a, -k)
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return np.ones_like(a, dtype=float) if result is None else result


def eval_value(ast: Expr, x):
    """Value of ``ast`` only.

    ``x`` may be a point of shape ``(n,)`` or a block of column points of
    shape ``(n, m)``; in the second case an array of ``m`` values is returned.
    """
    x = np.asarray(x, dtype=float)

    def ev(node):
        if isinstance(node, Const):
            return np.full(x.shape[1:], node.value) if x.ndim > 1 else node.value
        if isinstance(node, Var):
            return x[node.index - 1]
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, Call):
            a = ev(node.arg)
            if node.name in ("log", "sqrt") and np.any(np.asarray(a) <= 0.0):
                raise EvaluationFailure("expression", reason=f"{node.name} of a non-positive argument")
            with np.errstate(over="ignore"):
                return getattr(np, node.name)(a)
        left = ev(node.left)
        if node.op == "^":
            k = integer_exponent(node.right)
            if k is not None:
                return _np_int_power(left, k)
            if np.any(np.asarray(left) <= 0.0):
                raise EvaluationFailure("expression", reason="non-integer power of a non-positive base")
            return np.power(left, ev(node.right))
        right = ev(node.right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if np.any(np.asarray(right) == 0.0):
            raise EvaluationFailure("expression", reason="division by zero")
        return left / right

    out = ev(ast)
    if x.ndim == 1:
        return float(out)
    return np.asarray(out, dtype=float)

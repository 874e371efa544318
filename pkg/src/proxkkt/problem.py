"""Objective/constraint oracles and the problem container.

A :class:`FunctionOracle` wraps one scalar C^2 function on R^n. Missing
derivatives are synthesized by central finite differences. A :class:`Problem`
bundles an objective with equality constraints ``h_j(x) = 0`` and inequality
constraints ``g_l(x) <= 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, EvaluationFailure
from .linalg import symmetrize

GRAD_STEP = 1e-6
HESS_STEP = 1e-4


class ConstraintCountWarning(UserWarning):
    """Raised when ``m1 + m2 >= n``; the solvers still run."""


class InfeasibleStartWarning(UserWarning):
    """Raised when the single-constraint start point has ``g(x0) >= 0``."""


def _steps(x: np.ndarray, rel: float) -> np.ndarray:
    return rel * (1.0 + np.abs(x))


def fd_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray, rel: float = GRAD_STEP) -> np.ndarray:
    """Central-difference gradient with per-coordinate step ``rel*(1+|x_i|)``."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        g[i] = (fun(xp) - fun(xm)) / (xp[i] - xm[i])
    return g


def fd_jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel: float = HESS_STEP) -> np.ndarray:
    """Central-difference Jacobian of a vector map; column ``i`` is d/dx_i."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel)
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        cols.append((np.asarray(fun(xp)) - np.asarray(fun(xm))) / (xp[i] - xm[i]))
    return np.column_stack(cols)


@dataclass(frozen=True)
class FunctionOracle:
    """Value/gradient/Hessian evaluator for one scalar function.

    Attributes:
        dim: dimension ``n`` of the domain.
        value: ``x -> float``.
        gradient: optional ``x -> (n,)`` array; finite differences otherwise.
        hessian: optional ``x -> (n, n)`` array; finite differences of the
            gradient otherwise.
        jet: optional ``x -> (value, gradient, hessian)`` computed in one
            pass. When present it takes precedence over the three callables.
        vectorized: ``value`` also accepts an ``(n, m)`` array of column
            points and returns ``m`` values. Only the brute-force grid search
            uses this.
        name: label used in error messages and reports.
    """

    dim: int
    value: Callable
    gradient: Callable | None = None
    hessian: Callable | None = None
    jet: Callable | None = None
    vectorized: bool = False
    name: str = "f"

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DimensionMismatch(f"{self.name}: dimension must be >= 1, got {self.dim}")

    @property
    def has_gradient(self) -> bool:
        return self.gradient is not None or self.jet is not None

    @property
    def has_hessian(self) -> bool:
        return self.hessian is not None or self.jet is not None

    def _call(self, fn: Callable, x: np.ndarray, what: str):
        try:
            with np.errstate(all="ignore"):
                return fn(x)
        except EvaluationFailure as exc:
            raise EvaluationFailure(self.name, x, exc.reason) from exc
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationFailure(self.name, x, f"{what} raised {type(exc).__name__}: {exc}") from exc

    def _finite(self, out, x: np.ndarray, what: str) -> np.ndarray:
        out = np.asarray(out, dtype=float)
        if not np.all(np.isfinite(out)):
            raise EvaluationFailure(self.name, x, f"non-finite {what}")
        return out

    def _point(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float).reshape(-1)
        if v.size != self.dim:
            raise DimensionMismatch(f"{self.name}: expected a point of dimension {self.dim}, got {v.size}")
        return v

    def eval_value(self, x) -> float:
        x = self._point(x)
        return float(self._finite(self._call(self.value, x, "value"), x, "value"))

    def eval_gradient(self, x) -> np.ndarray:
        x = self._point(x)
        if self.jet is not None:
            return self.eval_jet(x)[1]
        if self.gradient is not None:
            g = self._call(self.gradient, x, "gradient")
            return self._finite(g, x, "gradient").reshape(self.dim)
        return fd_gradient(self.eval_value, x)

    def eval_hessian(self, x) -> np.ndarray:
        x = self._point(x)
        if self.jet is not None:
            return self.eval_jet(x)[2]
        if self.hessian is not None:
            H = self._call(self.hessian, x, "hessian")
            return symmetrize(self._finite(H, x, "hessian").reshape(self.dim, self.dim))
        return symmetrize(fd_jacobian(self.eval_gradient, x))

    def eval_jet(self, x) -> tuple[float, np.ndarray, np.ndarray]:
        """Value, gradient and Hessian at ``x``."""
        x = self._point(x)
        if self.jet is None:
            return self.eval_value(x), self.eval_gradient(x), self.eval_hessian(x)
        v, g, H = self._call(self.jet, x, "jet")
        v = float(self._finite(v, x, "value"))
        g = self._finite(g, x, "gradient").reshape(self.dim)
        H = symmetrize(self._finite(H, x, "hessian").reshape(self.dim, self.dim))
        return v, g, H


@dataclass(frozen=True)
class Problem:
    """minimize ``objective`` s.t. ``equalities == 0`` and ``inequalities <= 0``."""

    dim: int
    objective: FunctionOracle
    equalities: Sequence[FunctionOracle] = ()
    inequalities: Sequence[FunctionOracle] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        for oracle in (self.objective, *self.equalities, *self.inequalities):
            if oracle.dim != self.dim:
                raise DimensionMismatch(
                    f"oracle {oracle.name!r} has dimension {oracle.dim}, problem has {self.dim}"
                )
        if not self.satisfies_count_assumption:
            warnings.warn(
                f"problem {self.name or '<anonymous>'}: m1 + m2 = {self.m1 + self.m2} >= n = {self.dim}",
                ConstraintCountWarning,
                stacklevel=3,
            )

    @property
    def m1(self) -> int:
        return len(self.equalities)

    @property
    def m2(self) -> int:
        return len(self.inequalities)

    @property
    def satisfies_count_assumption(self) -> bool:
        return self.m1 + self.m2 < self.dim

    @property
    def is_single_inequality(self) -> bool:
        return self.m1 == 0 and self.m2 == 1

    def point(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float).reshape(-1)
        if v.size != self.dim:
            raise DimensionMismatch(f"expected a point of dimension {self.dim}, got {v.size}")
        return v


@dataclass
class EvaluationBundle:
    """Everything the solvers need at one point ``x``.

    Constraint Hessians are computed only when asked for through
    :meth:`eq_hessian` / :meth:`ineq_hessian`, then cached.
    """

    problem: Problem
    x: np.ndarray
    f: float
    grad: np.ndarray
    hess: np.ndarray
    eq_values: np.ndarray
    eq_grads: np.ndarray
    ineq_values: np.ndarray
    ineq_grads: np.ndarray
    _hess_cache: dict = field(default_factory=dict, repr=False)

    def eq_hessian(self, j: int) -> np.ndarray:
        key = ("eq", j)
        if key not in self._hess_cache:
            self._hess_cache[key] = self.problem.equalities[j].eval_hessian(self.x)
        return self._hess_cache[key]

    def ineq_hessian(self, l: int) -> np.ndarray:
        key = ("ineq", l)
        if key not in self._hess_cache:
            self._hess_cache[key] = self.problem.inequalities[l].eval_hessian(self.x)
        return self._hess_cache[key]


def evaluate_all(p: Problem, x) -> EvaluationBundle:
    """Evaluate f, f', f'' and every constraint value and gradient at ``x``."""
    x = p.point(x)
    n = p.dim
    if p.objective.jet is not None:
        f, g, H = p.objective.eval_jet(x)
    else:
        f, g, H = p.objective.eval_value(x), p.objective.eval_gradient(x), p.objective.eval_hessian(x)

    def constraint_block(oracles):
        vals = np.empty(len(oracles))
        grads = np.empty((len(oracles), n))
        for i, c in enumerate(oracles):
            vals[i] = c.eval_value(x)
            grads[i] = c.eval_gradient(x)
        return vals, grads

    ev, eg = constraint_block(p.equalities)
    iv, ig = constraint_block(p.inequalities)
    return EvaluationBundle(p, x.copy(), f, g, H, ev, eg, iv, ig)


@dataclass(frozen=True)
class DerivativeCheck:
    name: str
    kind: str
    status: str
    deviation: float | None
    passed: bool | None


@dataclass(frozen=True)
class DerivativeReport:
    x: np.ndarray
    tol: float
    entries: tuple[DerivativeCheck, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed is not False for e in self.entries)

    def __str__(self) -> str:
        lines = []
        for e in self.entries:
            dev = "-" if e.deviation is None else f"{e.deviation:.3e}"
            lines.append(f"{e.name:>12} {e.kind:<9} {e.status:<22} {dev}")
        return "\n".join(lines)


def _relative_deviation(a: np.ndarray, ref: np.ndarray) -> float:
    return float(np.max(np.abs(a - ref)) / max(1.0, float(np.max(np.abs(ref)))))


def check_derivatives(p: Problem, x, tol: float = 1e-6) -> DerivativeReport:
    """Compare explicit derivatives against finite differences at ``x``.

    The deviation is ``max|explicit - fd| / max(1, max|fd|)``. Oracles whose
    derivatives are synthesized are reported as skipped.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    x = p.point(x)
    entries = []
    oracles = [p.objective, *p.equalities, *p.inequalities]
    for o in oracles:
        if o.has_gradient:
            fd = fd_gradient(o.eval_value, x)
            dev = _relative_deviation(o.eval_gradient(x), fd)
            entries.append(DerivativeCheck(o.name, "gradient", "checked", dev, dev <= tol))
        else:
            entries.append(DerivativeCheck(o.name, "gradient", "synthesized, skipped", None, None))
        if o.has_hessian:
            fd = symmetrize(fd_jacobian(o.eval_gradient, x))
            dev = _relative_deviation(o.eval_hessian(x), fd)
            entries.append(DerivativeCheck(o.name, "hessian", "checked", dev, dev <= tol))
        else:
            entries.append(DerivativeCheck(o.name, "hessian", "synthesized, skipped", None, None))
    return DerivativeReport(x, tol, tuple(entries))

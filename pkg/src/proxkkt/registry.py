"""Built-in analytic test problems and a brute-force grid oracle.

Objectives and constraints here are written so that ``value`` works both on a
single point and on an ``(n, m)`` block of column points, which keeps the grid
search vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EvaluationFailure, NoFeasiblePoint, UnknownProblem
from .problem import FunctionOracle, Problem, evaluate_all
from .results import kkt_residuals

REGISTRY_KKT_TOL = 1e-9


@dataclass(frozen=True)
class KnownSolution:
    x: np.ndarray
    lambda_h: np.ndarray
    lambda_g_sq: np.ndarray


@dataclass(frozen=True)
class RegistryEntry:
    """A named problem with a start point and, if known, its KKT point.

    ``search_box`` is the ``(lo, hi)`` box handed to :func:`brute_force_minimize`
    when cross-checking the entry, and ``K`` the proximal constant the entry is
    tuned for (``None`` means "use the heuristic").
    """

    name: str
    problem: Problem
    x0: np.ndarray
    known_solution: KnownSolution | None
    provenance: str
    search_box: tuple[np.ndarray, np.ndarray] | None = None
    K: float | None = None


def _oracle(n, value, gradient, hessian, name):
    return FunctionOracle(dim=n, value=value, gradient=gradient, hessian=hessian, vectorized=True, name=name)


def _affine(coeffs, offset, name):
    a = np.asarray(coeffs, dtype=float)
    n = a.size
    return _oracle(
        n,
        lambda x: sum(a[i] * x[i] for i in range(n)) + offset,
        lambda x: a.copy(),
        lambda x: np.zeros((n, n)),
        name,
    )


def _shifted_quadratic(center, name="objective"):
    """``0.5 * |x - center|^2``."""
    c = np.asarray(center, dtype=float)
    n = c.size
    return _oracle(
        n,
        lambda x: 0.5 * sum((x[i] - c[i]) ** 2 for i in range(n)),
        lambda x: np.asarray(x, dtype=float) - c,
        lambda x: np.eye(n),
        name,
    )


def _rosenbrock():
    def value(x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    def gradient(x):
        return np.array([
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
            200.0 * (x[1] - x[0] ** 2),
        ])

    def hessian(x):
        return np.array([
            [2.0 - 400.0 * x[1] + 1200.0 * x[0] ** 2, -400.0 * x[0]],
            [-400.0 * x[0], 200.0],
        ])

    return _oracle(2, value, gradient, hessian, "objective")


def _circle(radius_sq, name):
    return _oracle(
        2,
        lambda x: x[0] ** 2 + x[1] ** 2 - radius_sq,
        lambda x: 2.0 * np.asarray(x, dtype=float),
        lambda x: 2.0 * np.eye(2),
        name,
    )


def _vec(*v) -> np.ndarray:
    return np.array(v, dtype=float)


def _box(lo, hi):
    return (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))


def _build() -> dict[str, RegistryEntry]:
    entries = [
        RegistryEntry(
            "quad-active",
            Problem(1, _shifted_quadratic([2.0]), (), (_affine([1.0], -1.0, "ineq[1]"),), name="quad-active"),
            _vec(0.0),
            KnownSolution(_vec(1.0), _vec(), _vec(1.0)),
            "f = (x-2)^2/2, g = x-1: the constraint binds, f'(1) = -1 so lambda^2 = 1",
            _box([-3.0], [3.0]),
            9.0,
        ),
        RegistryEntry(
            "quad-inactive",
            Problem(1, _shifted_quadratic([0.0]), (), (_affine([1.0], -1.0, "ineq[1]"),), name="quad-inactive"),
            _vec(-0.5),
            KnownSolution(_vec(0.0), _vec(), _vec(0.0)),
            "f = x^2/2, g = x-1: unconstrained minimum 0 is strictly feasible",
            _box([-3.0], [3.0]),
            9.0,
        ),
        RegistryEntry(
            "circle-eq",
            Problem(2, _affine([1.0, 1.0], 0.0, "objective"), (_circle(2.0, "eq[1]"),), (), name="circle-eq"),
            _vec(-1.2, -0.6),
            KnownSolution(_vec(-1.0, -1.0), _vec(0.5), _vec()),
            "f = x1+x2 on the circle |x|^2 = 2: (1,1) + lambda_h (2x1, 2x2) = 0 at (-1,-1)",
            # Solution at the lower corner: a linear objective along a band
            # around a curved manifold is otherwise flat to O(sqrt(spacing)).
            _box([-1.0, -1.0], [1.0, 1.0]),
            1.0,
        ),
        RegistryEntry(
            "mixed-2d",
            Problem(2, _shifted_quadratic([2.0, 0.0]), (_affine([0.0, 1.0], 0.0, "eq[1]"),),
                    (_affine([1.0, 0.0], -1.0, "ineq[1]"),), name="mixed-2d"),
            _vec(0.0, 0.5),
            KnownSolution(_vec(1.0, 0.0), _vec(0.0), _vec(1.0)),
            "f = ((x1-2)^2 + x2^2)/2, g = x1-1, h = x2",
            _box([-3.0, -3.0], [3.0, 3.0]),
            9.0,
        ),
        RegistryEntry(
            "box-2d",
            Problem(2, _shifted_quadratic([2.0, 2.0]), (),
                    (_affine([1.0, 0.0], -1.0, "ineq[1]"), _affine([0.0, 1.0], -1.0, "ineq[2]")),
                    name="box-2d"),
            _vec(0.5, 0.5),
            KnownSolution(_vec(1.0, 1.0), _vec(), _vec(1.0, 1.0)),
            "f = |x - (2,2)|^2/2, g1 = x1-1, g2 = x2-1: both bind with lambda^2 = 1",
            _box([-3.0, -3.0], [3.0, 3.0]),
            9.0,
        ),
        RegistryEntry(
            "rosenbrock-ineq",
            Problem(2, _rosenbrock(), (), (_circle(1.5, "ineq[1]"),), name="rosenbrock-ineq"),
            # not the origin: g'(0) = 0 there
            _vec(0.5, 0.0),
            None,
            "Rosenbrock inside the disc |x|^2 <= 1.5; the unconstrained minimum (1,1) is cut off",
            _box([-1.5, -1.5], [1.5, 1.5]),
            10.0,
        ),
    ]
    for e in entries:
        if e.known_solution is not None:
            _validate(e)
    return {e.name: e for e in entries}


def _validate(e: RegistryEntry) -> None:
    sol = e.known_solution
    b = evaluate_all(e.problem, sol.x)
    res = kkt_residuals(b.grad, b.eq_values, b.eq_grads, b.ineq_values, b.ineq_grads,
                        sol.lambda_h, sol.lambda_g_sq)
    if res.worst() > REGISTRY_KKT_TOL or np.any(sol.lambda_g_sq < 0):
        raise ValueError(f"registry entry {e.name!r}: known solution fails KKT check ({res})")


@lru_cache(maxsize=1)
def _registry() -> dict[str, RegistryEntry]:
    import warnings

    from .problem import ConstraintCountWarning

    with warnings.catch_warnings():
        # the 1-D entries have m1 + m2 == n on purpose
        warnings.simplefilter("ignore", ConstraintCountWarning)
        return _build()


def names() -> list[str]:
    return list(_registry())


def get(name: str) -> RegistryEntry:
    try:
        return _registry()[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}; available: {', '.join(names())}") from None


def _eval_on_grid(oracle: FunctionOracle, pts: np.ndarray) -> np.ndarray:
    """Values on column points; NaN where evaluation fails."""
    if oracle.vectorized:
        try:
            with np.errstate(all="ignore"):
                out = np.asarray(oracle.value(pts), dtype=float)
            if out.shape == (pts.shape[1],):
                return np.where(np.isfinite(out), out, np.nan)
        except (EvaluationFailure, ArithmeticError, ValueError):
            pass
    out = np.empty(pts.shape[1])
    for i in range(pts.shape[1]):
        try:
            out[i] = oracle.eval_value(pts[:, i])
        except EvaluationFailure:
            out[i] = np.nan
    return out


def brute_force_minimize(p: Problem, lo, hi, grid_points_per_axis: int) -> np.ndarray:
    """Best feasible point of a uniform grid over the box ``[lo, hi]``.

    A grid point is feasible when every ``g_l <= 1e-9 * scale`` (``scale`` is
    ``1 + max|g_l|`` over the grid) and every ``|h_j|`` is within the largest
    grid spacing. Ties go to the lexicographically smallest grid index.

    Raises:
        NoFeasiblePoint: when no grid point is feasible.
    """
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if p.dim > 3:
        raise ValueError(f"grid search is limited to dim <= 3, got {p.dim}")
    if lo.size != p.dim or hi.size != p.dim or np.any(lo >= hi):
        raise ValueError("need lo < hi componentwise, one entry per dimension")
    if grid_points_per_axis < 2:
        raise ValueError("need at least 2 grid points per axis")
    axes = [np.linspace(lo[i], hi[i], grid_points_per_axis) for i in range(p.dim)]
    spacing = float(np.max((hi - lo) / (grid_points_per_axis - 1)))
    pts = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")])

    f = _eval_on_grid(p.objective, pts)
    feasible = np.isfinite(f)
    for g in p.inequalities:
        gv = _eval_on_grid(g, pts)
        scale = 1.0 + float(np.nanmax(np.abs(gv))) if np.any(np.isfinite(gv)) else 1.0
        feasible &= np.isfinite(gv) & (gv <= 1e-9 * scale)
    for h in p.equalities:
        hv = _eval_on_grid(h, pts)
        feasible &= np.isfinite(hv) & (np.abs(hv) <= spacing)
    if not np.any(feasible):
        raise NoFeasiblePoint(f"no feasible point on the {grid_points_per_axis}^{p.dim} grid over [{lo}, {hi}]")
    masked = np.where(feasible, f, np.inf)
    # argmin returns the first occurrence, i.e. the smallest C-order index
    return pts[:, int(np.argmin(masked))].copy()


def grid_spacing(lo, hi, grid_points_per_axis: int) -> float:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return float(np.max((hi - lo) / (grid_points_per_axis - 1)))


__all__ = [
    "KnownSolution",
    "RegistryEntry",
    "brute_force_minimize",
    "get",
    "grid_spacing",
    "names",
]

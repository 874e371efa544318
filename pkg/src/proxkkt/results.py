"""Configuration and result records shared by both solvers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Termination(str, enum.Enum):
    STEP_TOLERANCE = "StepTolerance"
    ITERATION_CAP = "IterationCap"
    SINGULAR_SYSTEM = "SingularSystem"
    EVALUATION_FAILURE = "EvaluationFailure"
    DEGENERATE_CONSTRAINT_GRADIENT = "DegenerateConstraintGradient"
    ACTIVE_SET_CYCLE = "ActiveSetCycle"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one solve.

    Attributes:
        K: proximal constant added to the Hessian, ``K > 0``.
        e1: step-norm tolerance; the run stops once ``|x_{k+1} - x_k| < e1``.
        k_max: the run also stops once the iteration index ``k`` exceeds it.
        r: radius of the diagnostics ball around ``x0``.
        n_samples: diagnostics sample count.
        seed: diagnostics RNG seed.
    """

    K: float
    e1: float = 1e-5
    k_max: int = 500
    r: float = 1.0
    n_samples: int = 256
    seed: int = 42

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if not self.e1 > 0:
            raise ValueError(f"e1 must be positive, got {self.e1}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")


@dataclass(frozen=True)
class KktResiduals:
    """First-order optimality residuals at a point.

    ``stationarity`` is the Euclidean norm of the Lagrangian gradient, the
    other three are max-norms over the constraints (0 when there are none).
    """

    stationarity: float
    complementarity: float
    feasibility: float
    equality: float = 0.0

    def worst(self) -> float:
        return max(self.stationarity, self.complementarity, self.feasibility, self.equality)


@dataclass(frozen=True)
class IterateRecord:
    """One pass of the outer loop, taken at ``x`` (the iterate ``x_k``).

    ``lambda_g_sq_raw`` holds the squared inequality multipliers before any
    clamping, so negative entries mark the clamp events. Residuals are
    evaluated at ``x`` with the multipliers used for the step.
    """

    k: int
    x: np.ndarray
    x_next: np.ndarray
    lambda_h: np.ndarray
    lambda_g_sq: np.ndarray
    lambda_g_sq_raw: np.ndarray
    active: tuple[int, ...]
    step_norm: float
    kkt: KktResiduals
    least_squares: bool = False


def kkt_residuals(grad_f, eq_values, eq_grads, ineq_values, ineq_grads, lambda_h, lambda_g_sq) -> KktResiduals:
    lagrangian_grad = np.asarray(grad_f, dtype=float).copy()
    if len(lambda_h):
        lagrangian_grad += np.asarray(eq_grads).T @ lambda_h
    if len(lambda_g_sq):
        lagrangian_grad += np.asarray(ineq_grads).T @ lambda_g_sq
    g = np.asarray(ineq_values, dtype=float)
    h = np.asarray(eq_values, dtype=float)
    return KktResiduals(
        stationarity=float(np.linalg.norm(lagrangian_grad)),
        complementarity=float(np.max(np.abs(lambda_g_sq * g))) if g.size else 0.0,
        feasibility=float(max(0.0, np.max(g))) if g.size else 0.0,
        equality=float(np.max(np.abs(h))) if h.size else 0.0,
    )


@dataclass
class SolveReport:
    """Outcome of the single-inequality iteration."""

    iterates: list[IterateRecord]
    termination: Termination
    x_tilde: np.ndarray
    lambda_tilde_sq: float | None
    kkt: KktResiduals | None
    warnings: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.iterates)

    @property
    def lambda_h(self) -> np.ndarray:
        return np.zeros(0)

    @property
    def lambda_g_sq(self) -> np.ndarray:
        return np.zeros(0) if self.lambda_tilde_sq is None else np.array([self.lambda_tilde_sq])


@dataclass
class GeneralSolveReport:
    """Outcome of the general equality/inequality algorithm."""

    iterates: list[IterateRecord]
    termination: Termination
    x_tilde: np.ndarray
    multipliers: "MultiplierState | None"  # noqa: F821
    kkt: KktResiduals | None
    warnings: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.iterates)

    @property
    def lambda_h(self) -> np.ndarray:
        return np.zeros(0) if self.multipliers is None else self.multipliers.lambda_h

    @property
    def lambda_g_sq(self) -> np.ndarray:
        return np.zeros(0) if self.multipliers is None else self.multipliers.lambda_g_sq


TERMINATION_FOR_ERROR = {
    "SingularSystem": Termination.SINGULAR_SYSTEM,
    "EvaluationFailure": Termination.EVALUATION_FAILURE,
    "DegenerateConstraintGradient": Termination.DEGENERATE_CONSTRAINT_GRADIENT,
    "ActiveSetCycle": Termination.ACTIVE_SET_CYCLE,
}

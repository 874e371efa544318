"""Proximal linearized-Lagrangian solver with squared inequality multipliers."""

from .diagnostics import DiagnosticsReport, check_conditions, diagnose, estimate_constants, suggest_K
from .dsl import eval_with_derivatives, load_problem_file, parse_expression
from .errors import (
    ActiveSetCycle,
    DegenerateConstraintGradient,
    DimensionMismatch,
    EvaluationFailure,
    InsufficientSamples,
    IoFailure,
    NoConvergence,
    NoFeasiblePoint,
    ParseError,
    ProxKKTError,
    SingularMultiplierSystem,
    SingularSystem,
    UnknownFunction,
    UnknownProblem,
    UnknownVariable,
)
from .general import MultiplierState, active_set_resolve, general_step, multiplier_system, solve_general
from .linalg import extreme_eigenvalues, operator_norm, regularized_solve
from .problem import FunctionOracle, Problem, check_derivatives, evaluate_all
from .results import GeneralSolveReport, IterateRecord, KktResiduals, SolveReport, SolverConfig, Termination
from .single import multiplier_single, prox_newton_step, solve_single
from .trace import read_trace, write_trace

__all__ = [
    "ActiveSetCycle",
    "DegenerateConstraintGradient",
    "DiagnosticsReport",
    "DimensionMismatch",
    "EvaluationFailure",
    "FunctionOracle",
    "GeneralSolveReport",
    "InsufficientSamples",
    "IoFailure",
    "IterateRecord",
    "KktResiduals",
    "MultiplierState",
    "NoConvergence",
    "NoFeasiblePoint",
    "ParseError",
    "Problem",
    "ProxKKTError",
    "SingularMultiplierSystem",
    "SingularSystem",
    "SolveReport",
    "SolverConfig",
    "Termination",
    "UnknownFunction",
    "UnknownProblem",
    "UnknownVariable",
    "active_set_resolve",
    "check_conditions",
    "check_derivatives",
    "diagnose",
    "estimate_constants",
    "eval_with_derivatives",
    "evaluate_all",
    "extreme_eigenvalues",
    "general_step",
    "load_problem_file",
    "multiplier_single",
    "multiplier_system",
    "operator_norm",
    "parse_expression",
    "prox_newton_step",
    "read_trace",
    "regularized_solve",
    "solve_general",
    "solve_single",
    "suggest_K",
    "write_trace",
]

"""Proximal iteration with equality and inequality constraints.

At every iterate the multipliers come from a small linear system built on
``(f''(x_k) + K I)^{-1}``; inequality multipliers enter squared and an
active-set loop discards constraints whose squared multiplier comes out
nonpositive, re-solving over the survivors. The step then has the same
closed form as in the single-constraint case.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ActiveSetCycle, ProxKKTError, SingularMultiplierSystem
from .linalg import ShiftedFactor, factor_shifted
from .problem import EvaluationBundle, Problem, evaluate_all
from .results import (
    TERMINATION_FOR_ERROR,
    GeneralSolveReport,
    IterateRecord,
    SolverConfig,
    Termination,
    kkt_residuals,
)

log = logging.getLogger(__name__)

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class MultiplierState:
    """Multipliers at one iterate.

    Attributes:
        lambda_h: equality multipliers, sign-free.
        lambda_g_sq: squared inequality multipliers; zero outside ``active``.
            After :func:`active_set_resolve` every active entry is > 0.
        active: sorted 0-based indices of the inequalities kept in the system.
        lambda_g_sq_raw: squared inequality multipliers from the first pass,
            where every inequality is in the system, before any clamping.
        least_squares: some pass fell back to a minimum-norm least-squares
            solve because the constraint gradients were dependent.
        passes: number of linear solves performed.
    """

    lambda_h: np.ndarray
    lambda_g_sq: np.ndarray
    active: tuple[int, ...]
    lambda_g_sq_raw: np.ndarray
    least_squares: bool = False
    passes: int = 1


def assemble_multiplier_system(bundle: EvaluationBundle, factor: ShiftedFactor, active) -> tuple[np.ndarray, np.ndarray]:
    """Matrix and right-hand side of the multiplier system over ``active``.

    Unknowns are ordered as all equality multipliers first, then the squared
    multipliers of the active inequalities in the order given.
    """
    active = list(active)
    C = np.vstack([bundle.eq_grads, bundle.ineq_grads[active]]) if active else bundle.eq_grads
    c = np.concatenate([bundle.eq_values, bundle.ineq_values[active]])
    if C.shape[0] == 0:
        return np.zeros((0, 0)), np.zeros(0)
    Z = factor.solve(C.T)
    w = factor.solve(bundle.grad)
    return C @ Z, c - C @ w


def _solve_small(A: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    if A.shape[0] == 0:
        return np.zeros(0), False
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= SINGULAR_RTOL * s[0]:
        sol = np.linalg.lstsq(A, rhs, rcond=SINGULAR_RTOL)[0]
        if not np.all(np.isfinite(sol)):
            raise SingularMultiplierSystem("least-squares multiplier solve produced non-finite values")
        return sol, True
    return np.linalg.solve(A, rhs), False


def _system(bundle: EvaluationBundle, factor: ShiftedFactor, active: tuple[int, ...]):
    A, rhs = assemble_multiplier_system(bundle, factor, active)
    sol, ls = _solve_small(A, rhs)
    m1 = bundle.eq_values.size
    lam_g = np.zeros(bundle.ineq_values.size)
    lam_g[list(active)] = sol[m1:]
    return sol[:m1], lam_g, ls


def multiplier_system(x_k, p: Problem, K: float, active=None) -> MultiplierState:
    """Solve the multiplier system at ``x_k`` over the inequalities in ``active``.

    ``active`` defaults to every inequality. Entries of ``lambda_g_sq`` may be
    negative here; nothing is clamped.
    """
    bundle = evaluate_all(p, x_k)
    factor = factor_shifted(bundle.hess, K)
    J = tuple(sorted(range(p.m2) if active is None else set(active)))
    if any(not 0 <= l < p.m2 for l in J):
        raise ValueError(f"active indices {J} out of range for m2={p.m2}")
    lam_h, lam_g, ls = _system(bundle, factor, J)
    return MultiplierState(lam_h, lam_g, J, lam_g.copy(), ls, 1)


def resolve_from_bundle(bundle: EvaluationBundle, factor: ShiftedFactor) -> MultiplierState:
    m2 = bundle.ineq_values.size
    J = tuple(range(m2))
    raw = None
    any_ls = False
    for passes in range(1, m2 + 2):
        lam_h, lam_g, ls = _system(bundle, factor, J)
        any_ls |= ls
        if raw is None:
            raw = lam_g.copy()
        keep = tuple(l for l in J if lam_g[l] > 0.0)
        if len(keep) == len(J):
            return MultiplierState(lam_h, lam_g, J, raw, any_ls, passes)
        J = keep
    raise ActiveSetCycle(f"active set did not settle within {m2 + 1} passes")


def active_set_resolve(x_k, p: Problem, K: float) -> MultiplierState:
    """Multipliers at ``x_k`` after the monotone removal loop.

    Starts from every inequality, drops each one whose squared multiplier is
    ``<= 0`` and re-solves over the rest, until every survivor is positive or
    none are left. At most ``m2 + 1`` solves.
    """
    bundle = evaluate_all(p, x_k)
    return resolve_from_bundle(bundle, factor_shifted(bundle.hess, K))


def _check_state(ms: MultiplierState, p: Problem) -> None:
    if ms.lambda_h.size != p.m1 or ms.lambda_g_sq.size != p.m2:
        raise ValueError(
            f"multiplier sizes ({ms.lambda_h.size}, {ms.lambda_g_sq.size}) do not match "
            f"problem constraint counts ({p.m1}, {p.m2})"
        )


def _lagrangian_gradient(bundle: EvaluationBundle, ms: MultiplierState) -> np.ndarray:
    rhs = bundle.grad.copy()
    if ms.lambda_h.size:
        rhs += bundle.eq_grads.T @ ms.lambda_h
    if ms.lambda_g_sq.size:
        rhs += bundle.ineq_grads.T @ ms.lambda_g_sq
    return rhs


def general_step(x_k, ms: MultiplierState, p: Problem, K: float) -> np.ndarray:
    """``x_k - (f''+K I)^{-1} (f' + sum lambda_h h' + sum lambda_g^2 g')``."""
    _check_state(ms, p)
    bundle = evaluate_all(p, x_k)
    return bundle.x - factor_shifted(bundle.hess, K).solve(_lagrangian_gradient(bundle, ms))


def solve_general(p: Problem, x0, cfg: SolverConfig) -> GeneralSolveReport:
    """Run the general algorithm from ``x0``.

    Stops when ``|x_{k+1} - x_k| < cfg.e1`` or when ``k > cfg.k_max``. Errors
    raised inside the loop are re-raised with ``iteration`` and a partial
    ``report`` attached.
    """
    x = p.point(x0).copy()
    report = GeneralSolveReport([], Termination.ITERATION_CAP, x, None, None)
    if not p.satisfies_count_assumption:
        report.warnings.append(f"m1 + m2 = {p.m1 + p.m2} >= n = {p.dim}")
    k = 0
    try:
        while True:
            bundle = evaluate_all(p, x)
            factor = factor_shifted(bundle.hess, cfg.K)
            ms = resolve_from_bundle(bundle, factor)
            x_next = x - factor.solve(_lagrangian_gradient(bundle, ms))
            step = float(np.linalg.norm(x_next - x))
            report.iterates.append(
                IterateRecord(
                    k=k,
                    x=bundle.x,
                    x_next=x_next,
                    lambda_h=ms.lambda_h,
                    lambda_g_sq=ms.lambda_g_sq,
                    lambda_g_sq_raw=ms.lambda_g_sq_raw,
                    active=ms.active,
                    step_norm=step,
                    kkt=kkt_residuals(bundle.grad, bundle.eq_values, bundle.eq_grads, bundle.ineq_values,
                                      bundle.ineq_grads, ms.lambda_h, ms.lambda_g_sq),
                    least_squares=ms.least_squares,
                )
            )
            log.debug("k=%d step=%.3e active=%s", k, step, ms.active)
            x = x_next
            report.x_tilde = x
            if step < cfg.e1:
                report.termination = Termination.STEP_TOLERANCE
                break
            if k > cfg.k_max:
                report.termination = Termination.ITERATION_CAP
                break
            k += 1

        final = evaluate_all(p, x)
        ms = resolve_from_bundle(final, factor_shifted(final.hess, cfg.K))
    except ProxKKTError as exc:
        report.termination = TERMINATION_FOR_ERROR.get(type(exc).__name__, report.termination)
        exc.iteration = k
        exc.report = report
        raise
    report.multipliers = ms
    report.kkt = kkt_residuals(final.grad, final.eq_values, final.eq_grads, final.ineq_values,
                               final.ineq_grads, ms.lambda_h, ms.lambda_g_sq)
    return report

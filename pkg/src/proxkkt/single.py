"""Proximal iteration for one inequality constraint ``g(x) <= 0``.

Each iteration linearizes the proximal Lagrangian
``f(x) + lam^2 g(x) + K/2 |x - x_k|^2`` at ``x_k``, picks the squared
multiplier that makes the reduced model stationary in ``lam``, clamps it at
zero, and takes the closed-form step

    x_{k+1} = x_k - (f''(x_k) + K I)^{-1} (f'(x_k) + lam^2 g'(x_k)).
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .errors import DegenerateConstraintGradient, ProxKKTError
from .linalg import ShiftedFactor, factor_shifted
from .problem import EvaluationBundle, InfeasibleStartWarning, Problem, evaluate_all
from .results import (
    TERMINATION_FOR_ERROR,
    IterateRecord,
    SolveReport,
    SolverConfig,
    Termination,
    kkt_residuals,
)

log = logging.getLogger(__name__)

DEGENERATE_RTOL = 1e-14


def _require_single(p: Problem) -> None:
    if not p.is_single_inequality:
        raise ValueError(f"expected one inequality and no equalities, got m1={p.m1}, m2={p.m2}")


def multiplier_from_bundle(bundle: EvaluationBundle, factor: ShiftedFactor) -> tuple[float, float]:
    g = bundle.ineq_values[0]
    dg = bundle.ineq_grads[0]
    z = factor.solve(dg)
    den = float(np.dot(z, dg))
    if den <= DEGENERATE_RTOL * (1.0 + float(np.dot(dg, dg))):
        raise DegenerateConstraintGradient(
            f"[(f''+K I)^-1 g'] . g' = {den:.3e} at x={bundle.x.tolist()}"
        )
    w = factor.solve(bundle.grad)
    raw = -(float(np.dot(w, dg)) - g) / den
    return raw, max(0.0, raw)


def multiplier_single(x_k, p: Problem, K: float) -> tuple[float, float]:
    """Squared multiplier at ``x_k``: ``(raw, max(0, raw))``.

    ``raw`` zeroes the derivative of the reduced model in ``lam`` and is
    negative when no real nonzero multiplier exists.

    Raises:
        DegenerateConstraintGradient: when ``[(f''+K I)^-1 g'] . g'`` is not
            safely positive (e.g. ``g'(x_k) = 0``).
        SingularSystem: when ``f''(x_k) + K I`` cannot be factored.
    """
    _require_single(p)
    bundle = evaluate_all(p, x_k)
    return multiplier_from_bundle(bundle, factor_shifted(bundle.hess, K))


def prox_newton_step(x_k, lambda_sq: float, p: Problem, K: float) -> np.ndarray:
    """``x_k - (f''(x_k) + K I)^{-1} (f'(x_k) + lambda_sq * g'(x_k))``.

    ``p`` may have no constraints at all, in which case ``lambda_sq`` must be 0.
    """
    if lambda_sq < 0:
        raise ValueError(f"lambda_sq must be nonnegative, got {lambda_sq}")
    if p.m1 != 0 or p.m2 > 1:
        raise ValueError(f"expected at most one inequality and no equalities, got m1={p.m1}, m2={p.m2}")
    if p.m2 == 0 and lambda_sq != 0:
        raise ValueError("lambda_sq must be 0 for a problem without constraints")
    bundle = evaluate_all(p, x_k)
    rhs = bundle.grad.copy()
    if p.m2:
        rhs += lambda_sq * bundle.ineq_grads[0]
    return bundle.x - factor_shifted(bundle.hess, K).solve(rhs)


def _record(k: int, bundle: EvaluationBundle, x_next: np.ndarray, raw: float, lam: float) -> IterateRecord:
    lam_vec = np.array([lam])
    return IterateRecord(
        k=k,
        x=bundle.x,
        x_next=x_next,
        lambda_h=np.zeros(0),
        lambda_g_sq=lam_vec,
        lambda_g_sq_raw=np.array([raw]),
        active=(0,) if lam > 0 else (),
        step_norm=float(np.linalg.norm(x_next - bundle.x)),
        kkt=kkt_residuals(bundle.grad, [], np.zeros((0, bundle.x.size)), bundle.ineq_values,
                          bundle.ineq_grads, np.zeros(0), lam_vec),
    )


def solve_single(p: Problem, x0, cfg: SolverConfig) -> SolveReport:
    """Run the single-inequality iteration from ``x0``.

    Stops when ``|x_{k+1} - x_k| < cfg.e1`` or when ``k > cfg.k_max``. Errors
    raised inside the loop are re-raised with ``iteration`` and a partial
    ``report`` attached.
    """
    _require_single(p)
    x = p.point(x0).copy()
    report = SolveReport([], Termination.ITERATION_CAP, x, None, None)

    g0 = p.inequalities[0].eval_value(x)
    if g0 >= 0:
        msg = f"start point is not strictly feasible: g(x0) = {g0:.6g} >= 0"
        warnings.warn(msg, InfeasibleStartWarning, stacklevel=2)
        report.warnings.append(msg)

    k = 0
    try:
        while True:
            bundle = evaluate_all(p, x)
            factor = factor_shifted(bundle.hess, cfg.K)
            raw, lam = multiplier_from_bundle(bundle, factor)
            x_next = x - factor.solve(bundle.grad + lam * bundle.ineq_grads[0])
            rec = _record(k, bundle, x_next, raw, lam)
            report.iterates.append(rec)
            log.debug("k=%d step=%.3e lambda_sq=%.6g raw=%.6g", k, rec.step_norm, lam, raw)
            x = x_next
            report.x_tilde = x
            if rec.step_norm < cfg.e1:
                report.termination = Termination.STEP_TOLERANCE
                break
            if k > cfg.k_max:
                report.termination = Termination.ITERATION_CAP
                break
            k += 1

        final = evaluate_all(p, x)
        _, lam = multiplier_from_bundle(final, factor_shifted(final.hess, cfg.K))
    except ProxKKTError as exc:
        report.termination = TERMINATION_FOR_ERROR.get(type(exc).__name__, report.termination)
        exc.iteration = k
        exc.report = report
        raise
    report.lambda_tilde_sq = lam
    report.kkt = kkt_residuals(final.grad, [], np.zeros((0, p.dim)), final.ineq_values,
                               final.ineq_grads, np.zeros(0), np.array([lam]))
    return report

"""Sampled checks of the contraction hypotheses for the single-constraint iteration.

The convergence argument for :func:`proxkkt.single.solve_single` rests on a set
of constants (a Hessian bound ``K_hat_1``, a Lipschitz constant ``K_hat_3``
of the squared multiplier) and matrix inequalities over a ball
``B_r(x0)``. None of them has a computable closed form for general C^2
functions, so this module estimates them from uniform samples of the ball and
evaluates every inequality on the samples.

A matrix ordering ``A <= B`` is judged by ``lambda_min(B - A) >= -1e-10``;
the reported margin is that smallest eigenvalue. Failing conditions never stop
the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraintGradient, InsufficientSamples
from .linalg import factor_shifted, jacobi_eigenvalues
from .problem import Problem, evaluate_all
from .single import _require_single, multiplier_from_bundle

ORDER_TOL = 1e-10
_PAIR_CHUNK = 4096

CONDITION_LABELS = {
    "strict_feasibility_x0": "g(x0) < 0",
    "K_exceeds_K_hat_1": "K > K_hat_1",
    "alpha_1_in_unit_interval": "0 < alpha_1 < 1",
    "curvature_lower_bound": "f''(x) + lam^2(y) g''(x) >= alpha_1 (K_hat_1 + K) I",
    "hessian_ratio_near_identity": "(1 - alpha_1/4) I <= (f''(x)+K I)^-1 (f''(y)+K I) <= (1 + alpha_1/4) I",
    "scaled_curvature_bounds": "0 <= (f''(x) + lam^2(y) g''(x)) / (K - K_hat_1) <= (1 - alpha_1/2) I",
    "inverse_shift_bound": "(f''(x) + K I)^-1 <= I / (K - K_hat_1)",
    "multiplier_drift_bound": "|(f''(x) + K I)^-1| K_3 <= alpha_1 / 2",
}


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    margin: float
    witness: tuple[np.ndarray, ...]
    note: str = ""


@dataclass
class DiagnosticsReport:
    """Estimated constants and per-condition verdicts on ``B_r(x0)``.

    ``induction_start`` records whether the first step stayed inside
    ``B_{r(1 - alpha_0)}(x0)``; it is checked after the fact and is not part
    of :attr:`all_hold`.
    """

    x0: np.ndarray
    r: float
    K: float
    n_samples: int
    seed: int
    K_hat_1: float
    K_hat_3: float
    sup_grad_g: float
    K_3: float
    alpha_1: float
    alpha_0: float
    samples: np.ndarray
    skipped: int
    conditions: dict[str, ConditionResult] = field(default_factory=dict)
    induction_start: ConditionResult | None = None
    _samples: "_Samples | None" = field(default=None, repr=False, compare=False)

    @property
    def all_hold(self) -> bool:
        return bool(self.conditions) and all(c.holds for c in self.conditions.values())

    def table(self) -> str:
        lines = [
            f"ball: r = {self.r:g}, {self.n_samples} samples (seed {self.seed}, {self.skipped} skipped)",
            f"K = {self.K:.6g}  K_hat_1 = {self.K_hat_1:.6g}  K_hat_3 = {self.K_hat_3:.6g}  "
            f"K_3 = {self.K_3:.6g}  alpha_1 = {self.alpha_1:.6g}  alpha_0 = {self.alpha_0:.6g}",
        ]
        rows = list(self.conditions.items())
        if self.induction_start is not None:
            rows.append(("first_step_in_inner_ball", self.induction_start))
        for name, c in rows:
            verdict = "holds" if c.holds else "FAILS"
            note = f"  ({c.note})" if c.note else ""
            lines.append(f"  {verdict:<5}  margin {c.margin: .3e}  {name}{note}")
        return "\n".join(lines)


def sample_ball(x0, r: float, n_samples: int, seed: int) -> np.ndarray:
    """``n_samples`` points uniform in the Euclidean ball ``B_r(x0)``, one per row."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    n = x0.size
    d = rng.standard_normal((n_samples, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rad = r * rng.random(n_samples) ** (1.0 / n)
    return x0 + d * rad[:, None]


@dataclass
class _Samples:
    x: np.ndarray
    hess_f: np.ndarray
    hess_g: np.ndarray
    grad_g_norm: np.ndarray
    lam_sq: np.ndarray  # NaN where the multiplier formula degenerates


def _evaluate_samples(p: Problem, pts: np.ndarray, K: float) -> _Samples:
    n = p.dim
    N = pts.shape[0]
    hf = np.empty((N, n, n))
    hg = np.empty((N, n, n))
    gn = np.empty(N)
    lam = np.full(N, np.nan)
    for i, x in enumerate(pts):
        b = evaluate_all(p, x)
        hf[i] = b.hess
        hg[i] = b.ineq_hessian(0)
        gn[i] = np.linalg.norm(b.ineq_grads[0])
        try:
            lam[i] = multiplier_from_bundle(b, factor_shifted(b.hess, K))[1]
        except DegenerateConstraintGradient:
            pass
    return _Samples(pts, hf, hg, gn, lam)


def _max_lipschitz(x: np.ndarray, v: np.ndarray) -> float:
    dv = np.abs(v[:, None] - v[None, :])
    dx = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    iu = np.triu_indices(len(v), k=1)
    dv, dx = dv[iu], dx[iu]
    ok = dx > 0
    return float(np.max(dv[ok] / dx[ok])) if np.any(ok) else 0.0


def estimate_constants(p: Problem, x0, r: float, K: float, n_samples: int = 256, seed: int = 42) -> DiagnosticsReport:
    """Estimate ``K_hat_1``, ``K_hat_3``, ``K_3``, ``alpha_1`` and ``alpha_0``.

    ``K_hat_1`` is the largest spectral norm of ``f''`` on the samples and
    ``K_hat_3`` the largest difference quotient of the clamped squared
    multiplier over sample pairs. The returned report has no conditions yet;
    see :func:`check_conditions` and :func:`diagnose`.

    Raises:
        InsufficientSamples: if more than half of the samples have a
            degenerate constraint gradient.
    """
    _require_single(p)
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    if not r > 0 or not K > 0:
        raise ValueError("r and K must be positive")
    x0 = p.point(x0)
    pts = sample_ball(x0, r, n_samples, seed)
    s = _evaluate_samples(p, pts, K)
    good = np.isfinite(s.lam_sq)
    skipped = int(np.sum(~good))
    if skipped * 2 > n_samples:
        raise InsufficientSamples(f"{skipped} of {n_samples} samples have a degenerate constraint gradient")

    ev = jacobi_eigenvalues(s.hess_f)
    K_hat_1 = float(np.max(np.abs(ev)))
    K_hat_3 = _max_lipschitz(s.x[good], s.lam_sq[good])
    sup_grad_g = float(np.max(s.grad_g_norm))
    K_3 = K_hat_3 * sup_grad_g
    gap = abs(K - K_hat_1)
    if K_3 == 0.0:
        alpha_1 = 0.0
    else:
        alpha_1 = 2.0 * K_3 / gap if gap > 0 else math.inf
    rep = DiagnosticsReport(
        x0=x0, r=float(r), K=float(K), n_samples=n_samples, seed=seed,
        K_hat_1=K_hat_1, K_hat_3=K_hat_3, sup_grad_g=sup_grad_g, K_3=K_3,
        alpha_1=alpha_1, alpha_0=1.0 - alpha_1 / 4.0,
        samples=pts, skipped=skipped, _samples=s,
    )
    return rep


def _verdict(margin: float, witness, note: str = "") -> ConditionResult:
    holds = bool(margin >= -ORDER_TOL)
    return ConditionResult(holds, float(margin), tuple(np.asarray(w, dtype=float) for w in witness), note)


def _shifted_spectra(s: _Samples, K: float) -> np.ndarray:
    n = s.x.shape[1]
    return jacobi_eigenvalues(s.hess_f + K * np.eye(n))


def _endpoint_spectra(s: _Samples, good: np.ndarray):
    """Eigenvalues of ``f''(x) + mu g''(x)`` at the extreme sampled multipliers.

    ``lambda_min`` of ``A + mu B`` is concave and ``lambda_max`` convex in
    ``mu``, so over all pairs ``(x, y)`` the extremes occur at the smallest or
    largest sampled ``lam^2(y)``.
    """
    idx = np.flatnonzero(good)
    j_lo = idx[np.argmin(s.lam_sq[idx])]
    j_hi = idx[np.argmax(s.lam_sq[idx])]
    out = []
    for j in (j_lo, j_hi):
        out.append((j, jacobi_eigenvalues(s.hess_f + s.lam_sq[j] * s.hess_g)))
    return out


def _hessian_ratio_margin(s: _Samples, K: float, alpha_1: float):
    """Worst margin of the two-sided bound on ``(f''(x)+K I)^-1 (f''(y)+K I)``.

    The product is similar to ``L_x^-1 (f''(y)+K I) L_x^-T`` with ``L_x`` the
    Cholesky factor of ``f''(x)+K I``, whose eigenvalues a symmetric solver
    can take.
    """
    N, n = s.x.shape
    A = s.hess_f + K * np.eye(n)
    Linv = np.empty_like(A)
    for i in range(N):
        try:
            Linv[i] = np.linalg.inv(np.linalg.cholesky(A[i]))
        except np.linalg.LinAlgError:
            return -math.inf, (s.x[i],), "f''(x) + K I is not positive definite"
    lo_bound, hi_bound = 1.0 - alpha_1 / 4.0, 1.0 + alpha_1 / 4.0
    ii, jj = np.nonzero(~np.eye(N, dtype=bool))
    worst, wit = math.inf, (s.x[0], s.x[0])
    for start in range(0, ii.size, _PAIR_CHUNK):
        a, b = ii[start:start + _PAIR_CHUNK], jj[start:start + _PAIR_CHUNK]
        M = Linv[a] @ A[b] @ np.swapaxes(Linv[a], 1, 2)
        w = jacobi_eigenvalues(M)
        m = np.minimum(w[:, 0] - lo_bound, hi_bound - w[:, -1])
        k = int(np.argmin(m))
        if m[k] < worst:
            worst, wit = float(m[k]), (s.x[a[k]], s.x[b[k]])
    return worst, wit, ""


def check_conditions(p: Problem, x0, r: float, K: float, report: DiagnosticsReport) -> dict[str, ConditionResult]:
    """Evaluate every hypothesis on the samples carried by ``report``."""
    x0 = p.point(x0)
    s = report._samples
    if s is None:
        s = _evaluate_samples(p, report.samples, K)
    good = np.isfinite(s.lam_sq)
    a1, K1, K3 = report.alpha_1, report.K_hat_1, report.K_3
    out: dict[str, ConditionResult] = {}

    g0 = p.inequalities[0].eval_value(x0)
    out["strict_feasibility_x0"] = ConditionResult(g0 < 0, -g0, (x0,))
    hess_norms = np.abs(jacobi_eigenvalues(s.hess_f)).max(axis=1)
    out["K_exceeds_K_hat_1"] = ConditionResult(K > K1, K - K1, (s.x[int(np.argmax(hess_norms))],))

    if K3 == 0.0:
        # lam^2 is constant on the samples: any positive Lipschitz bound is
        # valid, so alpha_1 can be taken arbitrarily small but positive.
        out["alpha_1_in_unit_interval"] = ConditionResult(
            True, 0.0, (), "K_hat_3 = 0 on the samples; alpha_1 -> 0+"
        )
    else:
        m = min(a1, 1.0 - a1)
        out["alpha_1_in_unit_interval"] = ConditionResult(bool(0.0 < a1 < 1.0), m, ())

    shifted = _shifted_spectra(s, K)
    ends = _endpoint_spectra(s, good)

    lower = a1 * (K1 + K)
    worst, wit = math.inf, ()
    for j, w in ends:
        m = w[:, 0] - lower
        i = int(np.argmin(m))
        if m[i] < worst:
            worst, wit = float(m[i]), (s.x[i], s.x[j])
    out["curvature_lower_bound"] = _verdict(worst, wit)

    worst, wit, note = _hessian_ratio_margin(s, K, a1)
    out["hessian_ratio_near_identity"] = _verdict(worst, wit, note)

    if K > K1:
        worst, wit = math.inf, ()
        for j, w in ends:
            scaled = w / (K - K1)
            m = np.minimum(scaled[:, 0], (1.0 - a1 / 2.0) - scaled[:, -1])
            i = int(np.argmin(m))
            if m[i] < worst:
                worst, wit = float(m[i]), (s.x[i], s.x[j])
        out["scaled_curvature_bounds"] = _verdict(worst, wit)
    else:
        out["scaled_curvature_bounds"] = ConditionResult(False, -math.inf, (), "requires K > K_hat_1")

    if np.any(shifted == 0.0):
        i = int(np.argmax(np.any(shifted == 0.0, axis=1)))
        out["inverse_shift_bound"] = ConditionResult(False, -math.inf, (s.x[i],), "f''(x) + K I is singular")
        out["multiplier_drift_bound"] = ConditionResult(False, -math.inf, (s.x[i],), "f''(x) + K I is singular")
        return out

    inv_spectra = 1.0 / shifted
    if K != K1:
        m = 1.0 / (K - K1) - inv_spectra.max(axis=1)
        i = int(np.argmin(m))
        out["inverse_shift_bound"] = _verdict(float(m[i]), (s.x[i],))
    else:
        out["inverse_shift_bound"] = ConditionResult(False, -math.inf, (), "requires K != K_hat_1")

    inv_norm = np.abs(inv_spectra).max(axis=1)
    m = (a1 / 2.0 if math.isfinite(a1) else math.inf) - K3 * inv_norm
    i = int(np.argmin(m))
    out["multiplier_drift_bound"] = _verdict(float(m[i]), (s.x[i],))
    return out


def diagnose(p: Problem, x0, r: float, K: float, n_samples: int = 256, seed: int = 42) -> DiagnosticsReport:
    """Estimate the constants, check every condition, and test the first step."""
    rep = estimate_constants(p, x0, r, K, n_samples, seed)
    rep.conditions = check_conditions(p, x0, r, K, rep)
    x0 = rep.x0
    b = evaluate_all(p, x0)
    try:
        factor = factor_shifted(b.hess, K)
        lam = multiplier_from_bundle(b, factor)[1]
        x1 = x0 - factor.solve(b.grad + lam * b.ineq_grads[0])
        inner = r * (1.0 - rep.alpha_0)
        rep.induction_start = _verdict(inner - float(np.linalg.norm(x1 - x0)), (x1,),
                                       f"inner radius {inner:.3g}")
    except DegenerateConstraintGradient:
        rep.induction_start = ConditionResult(False, -math.inf, (x0,), "degenerate constraint gradient at x0")
    return rep


def estimate_K_hat_1(p: Problem, x0, r: float, n_samples: int = 256, seed: int = 42) -> float:
    pts = sample_ball(p.point(x0), r, n_samples, seed)
    H = np.stack([p.objective.eval_hessian(x) for x in pts])
    return float(np.max(np.abs(jacobi_eigenvalues(H))))


def suggest_K(p: Problem, x0, r: float, n_samples: int = 256, seed: int = 42) -> float:
    """Heuristic proximal constant ``max(10 * K_hat_1, 1)`` on ``B_r(x0)``."""
    return max(10.0 * estimate_K_hat_1(p, x0, r, n_samples, seed), 1.0)

import warnings

import numpy as np
import pytest
from conftest import dsl_problem
from oracles import grid_multiplier, half_square_data

from proxkkt import registry
from proxkkt.errors import DegenerateConstraintGradient
from proxkkt.linalg import operator_norm
from proxkkt.problem import InfeasibleStartWarning, evaluate_all
from proxkkt.results import SolverConfig, Termination
from proxkkt.single import multiplier_single, prox_newton_step, solve_single


@pytest.mark.parametrize("x_k, raw, clamped", [(2.0, 8.0, 8.0), (1.0, -1.0, 0.0)])
def test_multiplier_examples(half_square_single, x_k, raw, clamped):
    r, c = multiplier_single([x_k], half_square_single, 9.0)
    assert r == pytest.approx(raw, abs=1e-12)
    assert c == pytest.approx(clamped, abs=1e-12)


def test_multiplier_agrees_with_dual_grid_maximization(half_square_single):
    mu, dlam = grid_multiplier(*half_square_data(2.0, 1.0), K=9.0)
    assert mu == pytest.approx(8.0, abs=2 * np.sqrt(8.0) * dlam)
    mu, _ = grid_multiplier(*half_square_data(1.0, 1.0), K=9.0)
    assert mu == 0.0


def test_zero_constraint_gradient_is_degenerate():
    p = dsl_problem(1, "0.5*x1^2", ineq=["x1^2 - 1"])
    with pytest.raises(DegenerateConstraintGradient):
        multiplier_single([0.0], p, 9.0)


def test_multiplier_requires_single_inequality():
    p = dsl_problem(2, "x1", ineq=["x1", "x2"])
    with pytest.raises(ValueError):
        multiplier_single([0.0, 0.0], p, 1.0)


def test_step_examples(half_square_single):
    assert prox_newton_step([2.0], 8.0, half_square_single, 9.0) == pytest.approx([1.0], abs=1e-15)
    p = dsl_problem(2, "0.5*(x1^2 + x2^2)")
    np.testing.assert_allclose(prox_newton_step([0.5, 0.5], 0.0, p, 9.0), [0.45, 0.45], rtol=0, atol=1e-15)


def test_step_fixed_point(half_square_single):
    assert prox_newton_step([0.0], 0.0, half_square_single, 9.0)[0] == 0.0


def test_step_against_direct_solve():
    p = dsl_problem(2, "x1^4 + x1*x2 + exp(x2)", ineq=["x1^2 + x2 - 1"])
    x = np.array([0.3, -0.4])
    b = evaluate_all(p, x)
    ref = x - np.linalg.solve(b.hess + 3.0 * np.eye(2), b.grad + 0.7 * b.ineq_grads[0])
    np.testing.assert_allclose(prox_newton_step(x, 0.7, p, 3.0), ref, rtol=0, atol=1e-14)


def test_step_residual_invariant():
    p = dsl_problem(2, "x1^4 + x1*x2 + exp(x2)", ineq=["x1^2 + x2 - 1"])
    x = np.array([0.3, -0.4])
    b = evaluate_all(p, x)
    xn = prox_newton_step(x, 0.7, p, 3.0)
    res = (b.hess + 3.0 * np.eye(2)) @ (xn - x) + (b.grad + 0.7 * b.ineq_grads[0])
    assert np.linalg.norm(res) <= 1e-9


def test_negative_lambda_rejected(half_square_single):
    with pytest.raises(ValueError):
        prox_newton_step([1.0], -0.1, half_square_single, 9.0)


def test_quad_active_converges():
    e = registry.get("quad-active")
    rep = solve_single(e.problem, e.x0, SolverConfig(K=9.0, e1=1e-10))
    assert rep.termination is Termination.STEP_TOLERANCE
    assert rep.x_tilde[0] == pytest.approx(1.0, abs=1e-6)
    assert rep.lambda_tilde_sq == pytest.approx(1.0, abs=1e-5)
    assert rep.kkt.worst() <= 1e-6


def test_quad_inactive_converges():
    e = registry.get("quad-inactive")
    rep = solve_single(e.problem, e.x0, SolverConfig(K=9.0, e1=1e-10))
    assert rep.termination is Termination.STEP_TOLERANCE
    assert abs(rep.x_tilde[0]) <= 1e-6
    assert rep.lambda_tilde_sq == 0.0
    assert e.problem.inequalities[0].eval_value(rep.x_tilde) == pytest.approx(-1.0, abs=1e-6)


def test_infeasible_start_warns_and_lands_on_boundary(half_square_single):
    with pytest.warns(InfeasibleStartWarning):
        rep = solve_single(half_square_single, [2.0], SolverConfig(K=9.0, e1=1e-10))
    first = rep.iterates[0]
    assert first.lambda_g_sq[0] == pytest.approx(8.0, abs=1e-12)
    assert first.x_next[0] == pytest.approx(1.0, abs=1e-12)
    assert rep.warnings and "g(x0)" in rep.warnings[0]


def test_clamp_is_applied_at_every_step():
    for name in ("quad-active", "quad-inactive", "rosenbrock-ineq"):
        e = registry.get(name)
        rep = solve_single(e.problem, e.x0, SolverConfig(K=e.K, e1=1e-10))
        for it in rep.iterates:
            assert it.lambda_g_sq[0] == max(0.0, it.lambda_g_sq_raw[0])
            assert it.active == ((0,) if it.lambda_g_sq[0] > 0 else ())


def test_stationarity_bounded_by_step_tolerance():
    for name, e1 in [("quad-active", 1e-10), ("quad-inactive", 1e-8), ("rosenbrock-ineq", 1e-9)]:
        e = registry.get(name)
        rep = solve_single(e.problem, e.x0, SolverConfig(K=e.K, e1=e1, k_max=5000))
        assert rep.termination is Termination.STEP_TOLERANCE
        H = evaluate_all(e.problem, rep.x_tilde).hess
        assert rep.kkt.stationarity <= 10 * e1 * (e.K + operator_norm(H))


def test_rosenbrock_matches_reference_solution():
    # Reference point from scipy SLSQP at ftol 1e-12, frozen.
    e = registry.get("rosenbrock-ineq")
    rep = solve_single(e.problem, e.x0, SolverConfig(K=e.K, e1=1e-12, k_max=5000))
    np.testing.assert_allclose(rep.x_tilde, [0.90723396, 0.82275546], atol=1e-7)
    assert rep.kkt.worst() <= 1e-8


def test_iteration_cap_uses_literal_rule(half_square_single):
    rep = solve_single(half_square_single, [-0.5], SolverConfig(K=9.0, e1=1e-12, k_max=3))
    assert rep.termination is Termination.ITERATION_CAP
    # k = 0..4: the stop test k > k_max first passes at k = 4
    assert rep.iterations == 5


def test_error_carries_iteration_and_partial_report():
    p = dsl_problem(1, "0.5*(x1 - 0.5)^2", ineq=["x1^2 - 1"])
    with pytest.raises(DegenerateConstraintGradient) as info:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            solve_single(p, [0.0], SolverConfig(K=9.0))
    assert info.value.iteration == 0
    assert info.value.report.termination is Termination.DEGENERATE_CONSTRAINT_GRADIENT
    assert info.value.report.iterations == 0


@pytest.mark.parametrize("K", [0.2, 1.0, 9.0])
@pytest.mark.parametrize("x", [-1.0, 0.3, 1.0, 2.5])
@pytest.mark.parametrize("c", [-0.5, 0.5, 1.0, 2.0])
def test_raw_sign_matches_dual_maximizer(x, c, K):
    """The sign of raw lambda^2 (and any change under K -> 10K) is the one the dual function predicts."""
    p = dsl_problem(1, "0.5*x1^2", ineq=[f"x1 - {c}" if c >= 0 else f"x1 + {-c}"])
    for KK in (K, 10 * K):
        raw, clamped = multiplier_single([x], p, KK)
        assert raw == pytest.approx(KK * x - (1 + KK) * c, abs=1e-10)
        mu, dlam = grid_multiplier(*half_square_data(x, c), K=KK, lam_max=20.0)
        if raw > 1e-6:
            assert mu == pytest.approx(raw, abs=2 * np.sqrt(raw) * dlam + dlam**2)
        elif raw < -1e-6:
            assert mu == 0.0


def test_sign_can_flip_when_K_grows():
    p = dsl_problem(1, "0.5*x1^2", ineq=["x1 - 0.5"])
    assert multiplier_single([1.0], p, 0.2)[0] < 0 < multiplier_single([1.0], p, 2.0)[0]

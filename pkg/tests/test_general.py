import numpy as np
import pytest
from conftest import dsl_problem
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxkkt import registry
from proxkkt.general import (
    MultiplierState,
    active_set_resolve,
    assemble_multiplier_system,
    general_step,
    multiplier_system,
    resolve_from_bundle,
    solve_general,
)
from proxkkt.linalg import factor_shifted
from proxkkt.problem import evaluate_all
from proxkkt.results import SolverConfig, Termination
from proxkkt.single import multiplier_single, prox_newton_step, solve_single


@pytest.fixture
def eq_only():
    return dsl_problem(2, "0.5*(x1^2 + x2^2)", eq=["x1 - 1"])


@pytest.fixture
def two_ineq_origin():
    return dsl_problem(2, "0.5*(x1^2 + x2^2)", ineq=["x1 - 1", "x2 - 1"])


def test_equality_multiplier_example(eq_only):
    ms = multiplier_system([2.0, 0.0], eq_only, 9.0)
    assert ms.lambda_h == pytest.approx([8.0], abs=1e-12)
    assert ms.active == () and ms.lambda_g_sq.shape == (0,)


def test_single_inequality_reduces_to_closed_form(half_square_single):
    ms = multiplier_system([2.0], half_square_single, 9.0, active=[0])
    assert ms.lambda_g_sq == pytest.approx([8.0], abs=1e-12)
    assert ms.lambda_g_sq[0] == pytest.approx(multiplier_single([2.0], half_square_single, 9.0)[0], abs=1e-12)


def test_two_inequalities_both_negative(two_ineq_origin):
    ms = multiplier_system([0.5, 0.5], two_ineq_origin, 9.0)
    np.testing.assert_allclose(ms.lambda_g_sq, [-5.5, -5.5], atol=1e-12)


def test_excluded_inequalities_are_zero(two_ineq_origin):
    ms = multiplier_system([0.5, 0.5], two_ineq_origin, 9.0, active=[1])
    assert ms.lambda_g_sq[0] == 0.0
    assert ms.lambda_g_sq[1] == pytest.approx(-5.5, abs=1e-12)


def test_active_index_out_of_range(two_ineq_origin):
    with pytest.raises(ValueError):
        multiplier_system([0.0, 0.0], two_ineq_origin, 9.0, active=[2])


def test_clamping_empties_active_set(two_ineq_origin):
    ms = active_set_resolve([0.5, 0.5], two_ineq_origin, 9.0)
    assert ms.active == ()
    np.testing.assert_array_equal(ms.lambda_g_sq, [0.0, 0.0])
    np.testing.assert_allclose(ms.lambda_g_sq_raw, [-5.5, -5.5], atol=1e-12)
    np.testing.assert_allclose(general_step([0.5, 0.5], ms, two_ineq_origin, 9.0), [0.45, 0.45],
                               rtol=0, atol=1e-15)


def test_padded_single_inequality_clamps():
    p = dsl_problem(2, "0.5*(x1 - 2)^2 + 0.5*x2^2", ineq=["x1 - 1"])
    ms = multiplier_system([0.0, 0.0], p, 9.0)
    assert ms.lambda_g_sq == pytest.approx([-8.0], abs=1e-12)
    assert active_set_resolve([0.0, 0.0], p, 9.0).active == ()


def test_equalities_only_is_one_pass(eq_only):
    ms = active_set_resolve([2.0, 0.0], eq_only, 9.0)
    assert ms.passes == 1 and ms.active == ()
    assert ms.lambda_h == pytest.approx([8.0], abs=1e-12)


def test_partial_removal_then_positive():
    # g1 binds, g2 does not: the second pass keeps g1 only
    p = dsl_problem(3, "0.5*((x1 - 2)^2 + x2^2 + x3^2)", ineq=["x1 - 1", "x2 - 1"])
    ms = active_set_resolve([1.0, 0.0, 0.0], p, 9.0)
    assert ms.active == (0,)
    assert ms.lambda_g_sq[0] > 0 and ms.lambda_g_sq[1] == 0.0
    assert ms.passes == 2


def test_general_step_examples(eq_only):
    ms = MultiplierState(np.array([8.0]), np.zeros(0), (), np.zeros(0))
    np.testing.assert_allclose(general_step([2.0, 0.0], ms, eq_only, 9.0), [1.0, 0.0], rtol=0, atol=1e-15)
    p = dsl_problem(2, "0.5*(x1^2 + x2^2)")
    zero = MultiplierState(np.zeros(0), np.zeros(0), (), np.zeros(0))
    assert np.array_equal(general_step([0.0, 0.0], zero, p, 9.0), [0.0, 0.0])


def test_general_step_checks_sizes(eq_only):
    bad = MultiplierState(np.zeros(2), np.zeros(0), (), np.zeros(0))
    with pytest.raises(ValueError):
        general_step([2.0, 0.0], bad, eq_only, 9.0)


def test_matrix_is_symmetric():
    p = dsl_problem(3, "x1^4 + x2^2*x3 + exp(x3)", eq=["x1 + x2 + x3"], ineq=["x1^2 - x2", "sin(x3) + x1"])
    b = evaluate_all(p, [0.3, -0.2, 0.5])
    A, _ = assemble_multiplier_system(b, factor_shifted(b.hess, 4.0), [0, 1])
    assert A.shape == (3, 3)
    assert np.max(np.abs(A - A.T)) <= 1e-12


def test_dependent_gradients_use_least_squares():
    p = dsl_problem(3, "0.5*(x1^2 + x2^2 + x3^2)", eq=["x1 - 1", "2*x1 - 2"])
    ms = multiplier_system([2.0, 0.0, 0.0], p, 9.0)
    assert ms.least_squares
    assert np.all(np.isfinite(ms.lambda_h))
    # minimum-norm solution of the rank-one system
    b = evaluate_all(p, [2.0, 0.0, 0.0])
    A, rhs = assemble_multiplier_system(b, factor_shifted(b.hess, 9.0), ())
    np.testing.assert_allclose(ms.lambda_h, np.linalg.pinv(A) @ rhs, atol=1e-12)


def test_least_squares_flag_reaches_the_report():
    p = dsl_problem(3, "0.5*(x1^2 + x2^2 + x3^2)", eq=["x1 - 1", "2*x1 - 2"])
    rep = solve_general(p, [2.0, 0.0, 0.0], SolverConfig(K=9.0, e1=1e-10))
    assert rep.iterates[0].least_squares
    assert rep.x_tilde == pytest.approx([1.0, 0.0, 0.0], abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 4),
    arrays(np.float64, (4, 3), elements=st.floats(-2, 2)),
    arrays(np.float64, 4, elements=st.floats(-2, 2)),
    arrays(np.float64, 3, elements=st.floats(-2, 2)),
)
def test_removal_loop_pass_bound(m2, G, c, x):
    """Each pass either settles or shrinks J, so at most m2 + 1 solves happen."""
    ineqs = [f"{float(G[l, 0])!r}*x1 + {float(G[l, 1])!r}*x2 + {float(G[l, 2])!r}*x3 + {float(c[l])!r}" for l in range(m2)]
    p = dsl_problem(3, "0.5*((x1 - 1)^2 + (x2 + 2)^2 + x3^2)", ineq=ineqs)
    ms = active_set_resolve(x, p, 5.0)
    assert 1 <= ms.passes <= m2 + 1
    for l in range(m2):
        assert (ms.lambda_g_sq[l] > 0) if l in ms.active else (ms.lambda_g_sq[l] == 0.0)


def test_equalities_only_solve(eq_only):
    rep = solve_general(eq_only, [2.0, 0.0], SolverConfig(K=9.0, e1=1e-10))
    assert rep.termination is Termination.STEP_TOLERANCE
    np.testing.assert_allclose(rep.x_tilde, [1.0, 0.0], atol=1e-12)
    assert rep.lambda_h == pytest.approx([-1.0], abs=1e-8)
    assert rep.kkt.equality <= 1e-8


def test_mixed_solve():
    e = registry.get("mixed-2d")
    rep = solve_general(e.problem, e.x0, SolverConfig(K=9.0, e1=1e-10))
    assert rep.termination is Termination.STEP_TOLERANCE
    np.testing.assert_allclose(rep.x_tilde, [1.0, 0.0], atol=1e-6)
    assert rep.lambda_g_sq == pytest.approx([1.0], abs=1e-6)
    assert rep.lambda_h == pytest.approx([0.0], abs=1e-6)
    assert rep.kkt.worst() <= 1e-6


def test_inactive_box_solve(two_ineq_origin):
    rep = solve_general(two_ineq_origin, [0.5, 0.5], SolverConfig(K=9.0, e1=1e-10))
    assert rep.termination is Termination.STEP_TOLERANCE
    assert np.max(np.abs(rep.x_tilde)) <= 1e-8
    assert rep.multipliers.active == ()
    assert np.all(evaluate_all(two_ineq_origin, rep.x_tilde).ineq_values < 0)


def test_kkt_limits_on_registry_fixtures():
    for name in registry.names():
        e = registry.get(name)
        rep = solve_general(e.problem, e.x0, SolverConfig(K=e.K, e1=1e-10, k_max=5000))
        assert rep.termination is Termination.STEP_TOLERANCE, name
        k = rep.kkt
        assert max(k.stationarity, k.complementarity, k.equality, k.feasibility) <= 1e-6, name


def test_active_set_soundness_at_every_iterate():
    for name in registry.names():
        e = registry.get(name)
        rep = solve_general(e.problem, e.x0, SolverConfig(K=e.K, e1=1e-10, k_max=5000))
        for it in rep.iterates + [None]:
            lam, J = (rep.lambda_g_sq, rep.multipliers.active) if it is None else (it.lambda_g_sq, it.active)
            for l in range(e.problem.m2):
                assert (lam[l] > 0) if l in J else (lam[l] == 0.0)


def test_reduction_to_single_solver():
    for name in ("quad-active", "quad-inactive", "rosenbrock-ineq"):
        e = registry.get(name)
        cfg = SolverConfig(K=e.K, e1=1e-10)
        a = solve_single(e.problem, e.x0, cfg)
        b = solve_general(e.problem, e.x0, cfg)
        assert a.iterations == b.iterations
        for s, g in zip(a.iterates, b.iterates):
            assert np.max(np.abs(s.x_next - g.x_next)) <= 1e-12
            assert s.lambda_g_sq[0] == pytest.approx(g.lambda_g_sq[0], rel=1e-12, abs=1e-12)


def test_box_first_pass_is_pure_gradient_step():
    e = registry.get("box-2d")
    rep = solve_general(e.problem, e.x0, SolverConfig(K=9.0, e1=1e-10))
    first = rep.iterates[0]
    np.testing.assert_allclose(first.lambda_g_sq_raw, [-3.5, -3.5], atol=1e-12)
    assert first.active == ()
    unconstrained = dsl_problem(2, "0.5*((x1 - 2)^2 + (x2 - 2)^2)")
    np.testing.assert_allclose(first.x_next, prox_newton_step(e.x0, 0.0, unconstrained, 9.0), rtol=0, atol=1e-12)

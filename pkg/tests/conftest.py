import numpy as np
import pytest

from proxkkt.dsl.loader import parse_problem_text


def dsl_problem(n, objective, eq=(), ineq=()):
    lines = [f"n = {n}", f"minimize = {objective}"]
    lines += [f"eq = {e}" for e in eq]
    lines += [f"ineq = {g}" for g in ineq]
    return parse_problem_text("\n".join(lines)).problem


@pytest.fixture
def half_square_single():
    """f = x^2/2, g = x - 1."""
    return dsl_problem(1, "0.5*x1^2", ineq=["x1 - 1"])


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])

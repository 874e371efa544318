"""Line-oriented problem files.

Example::

    # minimize a shifted quadratic over a half-line
    n = 1
    minimize = 0.5*(x1 - 2)^2
    ineq = x1 - 1
    x0 = 0
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, IoFailure, ParseError
from ..problem import FunctionOracle, Problem
from .dual import eval_value, eval_with_derivatives
from .parser import Expr, parse_expression

_KEYS = ("n", "minimize", "eq", "ineq", "x0")


@dataclass(frozen=True)
class ProblemFile:
    problem: Problem
    x0: np.ndarray | None
    objective_text: str
    equality_texts: tuple[str, ...]
    inequality_texts: tuple[str, ...]


def expression_oracle(ast: Expr, n: int, name: str) -> FunctionOracle:
    return FunctionOracle(
        dim=n,
        value=partial(eval_value, ast),
        jet=partial(eval_with_derivatives, ast),
        vectorized=True,
        name=name,
    )


def _with_line(exc: ParseError, line: int) -> ParseError:
    return type(exc)(exc.message, position=exc.position, line=line)


def parse_problem_text(text: str, name: str = "") -> ProblemFile:
    entries: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition("=")
        key = key.strip()
        if not sep:
            raise ParseError(f"expected '<key> = <value>', got {line!r}", line=lineno)
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}; expected one of {', '.join(_KEYS)}", line=lineno)
        entries.append((key, rest.strip(), lineno))

    def single(key):
        found = [e for e in entries if e[0] == key]
        if len(found) > 1:
            raise ParseError(f"{key!r} given more than once", line=found[1][2])
        return found[0] if found else None

    n_entry = single("n")
    if n_entry is None:
        raise ParseError("missing 'n = <dimension>' line")
    try:
        n = int(n_entry[1])
    except ValueError:
        raise ParseError(f"n must be a positive integer, got {n_entry[1]!r}", line=n_entry[2]) from None
    if n < 1:
        raise ParseError(f"n must be a positive integer, got {n}", line=n_entry[2])

    obj = single("minimize")
    if obj is None:
        raise ParseError("missing 'minimize = <expression>' line")

    def parse(entry) -> Expr:
        try:
            return parse_expression(entry[1], n)
        except ParseError as exc:
            raise _with_line(exc, entry[2]) from None

    objective = expression_oracle(parse(obj), n, "objective")
    eq_entries = [e for e in entries if e[0] == "eq"]
    ineq_entries = [e for e in entries if e[0] == "ineq"]
    eqs = [expression_oracle(parse(e), n, f"eq[{j}]") for j, e in enumerate(eq_entries, start=1)]
    ineqs = [expression_oracle(parse(e), n, f"ineq[{l}]") for l, e in enumerate(ineq_entries, start=1)]

    x0 = None
    x0_entry = single("x0")
    if x0_entry is not None:
        x0 = parse_vector(x0_entry[1], line=x0_entry[2])
        if x0.size != n:
            raise DimensionMismatch(f"line {x0_entry[2]}: x0 has {x0.size} entries, n = {n}")

    problem = Problem(n, objective, eqs, ineqs, name=name)
    return ProblemFile(
        problem,
        x0,
        obj[1],
        tuple(e[1] for e in eq_entries),
        tuple(e[1] for e in ineq_entries),
    )


def parse_vector(text: str, line: int | None = None) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ParseError(f"expected comma-separated reals, got {text!r}", line=line) from None
    v = np.array(values)
    if not np.all(np.isfinite(v)):
        raise ParseError("vector entries must be finite", line=line)
    return v


def read_problem_file(path) -> ProblemFile:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoFailure(f"cannot read problem file {str(p)!r}: {exc}") from exc
    return parse_problem_text(text, name=p.stem)


def load_problem_file(path) -> Problem:
    """Load a problem file; see :func:`read_problem_file` to also get ``x0``."""
    return read_problem_file(path).problem

"""Exception hierarchy shared by every proxkkt module."""

from __future__ import annotations

from typing import Any


class ProxKKTError(Exception):
    """Base class for all errors raised by proxkkt.

    Solve loops attach ``iteration`` (the failing ``k``) and ``report`` (the
    partial run) before re-raising.
    """

    iteration: int | None = None
    report: Any = None


class SingularSystem(ProxKKTError):
    """The shifted Hessian ``H + K*I`` is numerically singular."""


class NoConvergence(ProxKKTError):
    """An iterative linear-algebra kernel exceeded its sweep cap."""


class EvaluationFailure(ProxKKTError):
    """A function oracle produced a non-finite value or left its domain."""

    def __init__(self, which: str, where: Any = None, reason: str = "non-finite output"):
        self.which = which
        self.where = where
        self.reason = reason
        loc = "" if where is None else f" at x={list(map(float, where))}"
        super().__init__(f"{which}: {reason}{loc}")


class DegenerateConstraintGradient(ProxKKTError):
    """The single-constraint multiplier formula would divide by ~zero."""


class SingularMultiplierSystem(ProxKKTError):
    """The multiplier linear system could not be solved even in least squares."""


class ActiveSetCycle(ProxKKTError):
    """The active-set removal loop exceeded its hard pass bound."""


class ParseError(ProxKKTError):
    """Syntax error in an expression or a problem file."""

    def __init__(self, message: str, position: int | None = None, line: int | None = None):
        self.message = message
        self.position = position
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"offset {position}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class UnknownVariable(ParseError):
    pass


class UnknownFunction(ParseError):
    pass


class DimensionMismatch(ProxKKTError):
    pass


class IoFailure(ProxKKTError):
    pass


class UnknownProblem(ProxKKTError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class NoFeasiblePoint(ProxKKTError):
    pass


class InsufficientSamples(ProxKKTError):
    pass

"""``proxkkt`` command-line front end.

Exit status: 0 when the step tolerance was met, 2 when the iteration cap was
reached, 3 on a solver error, 1 on a usage or input error.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import registry
from .diagnostics import diagnose, suggest_K
from .dsl.loader import parse_vector, read_problem_file
from .errors import DimensionMismatch, IoFailure, ParseError, ProxKKTError, UnknownProblem
from .general import solve_general
from .problem import Problem
from .results import SolverConfig, Termination
from .single import solve_single
from .trace import dumps, write_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ITERATION_CAP = 2
EXIT_SOLVER_ERROR = 3

REGISTRY_PREFIX = "registry:"


def exit_code(termination: Termination) -> int:
    if termination is Termination.STEP_TOLERANCE:
        return EXIT_OK
    if termination is Termination.ITERATION_CAP:
        return EXIT_ITERATION_CAP
    return EXIT_SOLVER_ERROR


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    problem: str
    K: float | str = "auto"
    e1: float = 1e-5
    k_max: int = 500
    x0: np.ndarray | None = None
    diagnostics: bool = False
    r: float = 1.0
    seed: int = 42
    trace: str | None = None
    format: str = "text"
    force_general: bool = False


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return v


def _K_arg(text: str) -> float | str:
    return "auto" if text == "auto" else _positive_float(text)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _vector_arg(text: str) -> np.ndarray:
    try:
        return parse_vector(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="proxkkt", description="Proximal linearized-Lagrangian solver.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve a problem file or a registry problem")
    s.add_argument("problem", help="problem file path, or registry:<name>")
    s.add_argument("--K", type=_K_arg, default="auto", help="proximal constant or 'auto' (default)")
    s.add_argument("--e1", type=_positive_float, default=1e-5, help="step-norm tolerance (default 1e-5)")
    s.add_argument("--kmax", type=_positive_int, default=500, help="iteration cap (default 500)")
    s.add_argument("--x0", type=_vector_arg, default=None, help="start point v1,v2,...")
    s.add_argument("--diagnostics", action="store_true", help="check the convergence hypotheses on B_r(x0)")
    s.add_argument("--r", type=_positive_float, default=1.0, help="diagnostics ball radius (default 1)")
    s.add_argument("--seed", type=int, default=42, help="diagnostics sampling seed (default 42)")
    s.add_argument("--trace", default=None, help="write a JSON-lines trace to this path")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.add_argument("--force-general", action="store_true",
                   help="use the general algorithm even for a single inequality")

    sub.add_parser("list", help="list the built-in registry problems")
    return parser


def load_target(target: str) -> tuple[Problem, np.ndarray | None]:
    if target.startswith(REGISTRY_PREFIX):
        entry = registry.get(target[len(REGISTRY_PREFIX):])
        return entry.problem, entry.x0
    pf = read_problem_file(target)
    return pf.problem, pf.x0


def _vec(v) -> list[float]:
    return [float(t) for t in np.asarray(v, dtype=float).reshape(-1)]


def _summary(report, K: float, solver: str) -> dict:
    out = {
        "solver": solver,
        "K": K,
        "termination": str(report.termination),
        "iterations": report.iterations,
        "x_tilde": _vec(report.x_tilde),
        "lambda_h": _vec(report.lambda_h),
        "lambda_g_sq": _vec(report.lambda_g_sq),
    }
    if report.kkt is not None:
        out["kkt"] = {
            "stationarity": report.kkt.stationarity,
            "complementarity": report.kkt.complementarity,
            "feasibility": report.kkt.feasibility,
            "equality": report.kkt.equality,
        }
    active = getattr(getattr(report, "multipliers", None), "active", None)
    if active is not None:
        out["active"] = [int(l) + 1 for l in active]
    if report.warnings:
        out["warnings"] = list(report.warnings)
    return out


def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{t:.10g}" for t in v) + "]"


def _render_text(summary: dict, error: str | None, diag_table: str | None) -> str:
    lines = [
        f"solver:       {summary['solver']} (K = {summary['K']:.6g})",
        f"termination:  {summary['termination']}",
        f"iterations:   {summary['iterations']}",
        f"x:            {_fmt_vec(summary['x_tilde'])}",
    ]
    if summary["lambda_h"]:
        lines.append(f"lambda_h:     {_fmt_vec(summary['lambda_h'])}")
    if summary["lambda_g_sq"]:
        lines.append(f"lambda_g^2:   {_fmt_vec(summary['lambda_g_sq'])}")
    if "active" in summary:
        lines.append(f"active set:   {summary['active']}")
    if "kkt" in summary:
        k = summary["kkt"]
        lines.append(
            f"kkt:          stationarity {k['stationarity']:.3e}  complementarity {k['complementarity']:.3e}  "
            f"feasibility {k['feasibility']:.3e}  equality {k['equality']:.3e}"
        )
    if error:
        lines.append(f"error:        {error}")
    if diag_table:
        lines.append("diagnostics:")
        lines.extend("  " + t for t in diag_table.splitlines())
    return "\n".join(lines)


def run(cfg: RunConfig, out=None, err=None) -> int:
    """Execute one ``solve`` run and return the process exit status."""
    out = out or sys.stdout
    err = err or sys.stderr

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            problem, file_x0 = load_target(cfg.problem)
            x0 = cfg.x0 if cfg.x0 is not None else file_x0
            if x0 is None:
                raise UsageError("no start point: the problem has no x0 and --x0 was not given")
            if x0.size != problem.dim:
                raise DimensionMismatch(f"x0 has {x0.size} entries, problem has n = {problem.dim}")
        except (UsageError, ParseError, IoFailure, DimensionMismatch, UnknownProblem) as exc:
            print(f"proxkkt: error: {exc}", file=err)
            return EXIT_USAGE

        single = problem.is_single_inequality and not cfg.force_general
        code, error, diag_table, report, K = EXIT_SOLVER_ERROR, None, None, None, None
        try:
            K = suggest_K(problem, x0, cfg.r, seed=cfg.seed) if cfg.K == "auto" else float(cfg.K)
            sc = SolverConfig(K=K, e1=cfg.e1, k_max=cfg.k_max, r=cfg.r, seed=cfg.seed)
            report = (solve_single if single else solve_general)(problem, x0, sc)
            code = exit_code(report.termination)
        except ProxKKTError as exc:
            report = exc.report
            error = f"{type(exc).__name__}: {exc}"
            if exc.iteration is not None:
                error += f" (iteration {exc.iteration})"

        if cfg.diagnostics and K is not None:
            if problem.is_single_inequality:
                try:
                    diag_table = diagnose(problem, x0, cfg.r, K, seed=cfg.seed).table()
                except ProxKKTError as exc:
                    diag_table = f"unavailable: {type(exc).__name__}: {exc}"
            else:
                diag_table = "unavailable: the hypotheses are stated for one inequality and no equalities"

    for w in caught:
        print(f"proxkkt: warning: {w.message}", file=err)

    if report is None:
        print(f"proxkkt: error: {error}", file=err)
        return EXIT_SOLVER_ERROR

    if cfg.trace:
        try:
            write_trace(report, cfg.trace)
        except IoFailure as exc:
            print(f"proxkkt: error: {exc}", file=err)
            return EXIT_USAGE

    summary = _summary(report, K, "single" if single else "general")
    if cfg.format == "json":
        if error:
            summary["error"] = error
        if diag_table:
            summary["diagnostics"] = diag_table
        print(dumps(summary), file=out)
    else:
        print(_render_text(summary, error, diag_table), file=out)
    if error:
        print(f"proxkkt: error: {error}", file=err)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in registry.names():
            print(f"{name:<18} {registry.get(name).provenance}")
        return EXIT_OK
    cfg = RunConfig(
        problem=args.problem, K=args.K, e1=args.e1, k_max=args.kmax, x0=args.x0,
        diagnostics=args.diagnostics, r=args.r, seed=args.seed, trace=args.trace,
        format=args.format, force_general=args.force_general,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

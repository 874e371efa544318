from .dual import Dual2, eval_value, eval_with_derivatives
from .loader import ProblemFile, load_problem_file, parse_problem_text, read_problem_file
from .parser import BinOp, Call, Const, Neg, Var, parse_expression, to_text

__all__ = [
    "BinOp",
    "Call",
    "Const",
    "Dual2",
    "Neg",
    "ProblemFile",
    "Var",
    "eval_value",
    "eval_with_derivatives",
    "load_problem_file",
    "parse_expression",
    "parse_problem_text",
    "read_problem_file",
    "to_text",
]

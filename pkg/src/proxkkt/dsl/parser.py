"""Recursive-descent parser for the arithmetic expression language.

Grammar, loosest binding first::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1 .. xn`` (1-based). Functions: sin, cos, exp, log, sqrt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..errors import ParseError, UnknownFunction, UnknownVariable

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


@dataclass(frozen=True)
class Const:
    value: float

    kind = "constant"
    children = ()


@dataclass(frozen=True)
class Var:
    index: int

    kind = "variable"
    children = ()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    @property
    def kind(self) -> str:
        return _BINOP_KIND[self.op]

    @property
    def children(self) -> tuple:
        return (self.left, self.right)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    kind = "neg"

    @property
    def children(self) -> tuple:
        return (self.operand,)


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"

    kind = "call"

    @property
    def children(self) -> tuple:
        return (self.arg,)


Expr = Union[Const, Var, BinOp, Neg, Call]

_BINOP_KIND = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_VAR_RE = re.compile(r"x(\d+)")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op" or "end"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", position=pos)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int):
        self.tokens = tokenize(text)
        self.i = 0
        self.n = n

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(f"expected {text!r}, found {_describe(self.tok)}", position=self.tok.pos)
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"expected an operator or end of input, found {_describe(self.tok)}",
                             position=self.tok.pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(float(t.text))
        if t.kind == "ident":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {t.text!r}", position=t.pos)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            m = _VAR_RE.fullmatch(t.text)
            if m is None:
                raise ParseError(f"unknown identifier {t.text!r}; variables are x1..x{self.n}",
                                 position=t.pos)
            index = int(m.group(1))
            if not 1 <= index <= self.n:
                raise UnknownVariable(f"variable {t.text} outside x1..x{self.n}", position=t.pos)
            return Var(index)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"expected a number, variable, function call or '(', found {_describe(t)}",
                         position=t.pos)


def _describe(t: Token) -> str:
    return "end of input" if t.kind == "end" else repr(t.text)


def parse_expression(text: str, n: int) -> Expr:
    """Parse ``text`` into an expression tree over variables ``x1..xn``."""
    if not text or not text.strip():
        raise ParseError("empty expression", position=0)
    if n < 1:
        raise ValueError("dimension must be positive")
    return _Parser(text, n).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_POW_PREC = 4
_ATOM_PREC = 5


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _POW_PREC if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def to_text(node: Expr) -> str:
    """Canonical printer; ``parse_expression(to_text(t), n) == t``."""
    if isinstance(node, Const):
        v = float(node.value)
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return f"-({inner})" if _prec(node.operand) < _NEG_PREC else f"-{inner}"
    if node.op == "^":
        left = to_text(node.left)
        if _prec(node.left) <= _POW_PREC:
            left = f"({left})"
        right = to_text(node.right)
        if _prec(node.right) < _NEG_PREC:
            right = f"({right})"
        return f"{left}^{right}"
    p = _PREC[node.op]
    left = to_text(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = to_text(node.right)
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def max_variable(node: Expr) -> int:
    if isinstance(node, Var):
        return node.index
    return max((max_variable(c) for c in node.children), default=0)

"""Requirement expressions and their quantitative (robustness) semantics.

Grammar, lowest precedence first::

    expr   := or
    or     := and ("||" and)*
    and    := unary ("&&" unary)*
    unary  := "!" unary | cmp
    cmp    := sum (("<=" | "<" | ">=" | ">" | "==") sum)?
    sum    := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := NUMBER | IDENT | "abs" "(" expr ")" | "(" expr ")" | "-" factor

Robustness maps a boolean expression to a real number whose sign says whether
it holds: positive means true, zero or negative means false.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "And",
    "Arith",
    "Cmp",
    "DEFAULT_TOL",
    "DivisionByZero",
    "ExprError",
    "Neg",
    "Not",
    "Num",
    "Or",
    "Sig",
    "UnknownSignal",
    "Abs",
    "is_boolean",
    "parse_expr",
    "robustness",
    "robustness_series",
    "signals",
    "unparse",
]

DEFAULT_TOL = 1e-6


class ExprError(ValueError):
    """Malformed or ill-typed expression."""


class UnknownSignal(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"unknown signal {self.name!r}"


class DivisionByZero(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sig:
    name: str


@dataclass(frozen=True)
class Arith:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Abs:
    arg: "Expr"


@dataclass(frozen=True)
class Cmp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


Expr = Union[Num, Sig, Arith, Neg, Abs, Cmp, And, Or, Not]

_BOOLEAN = (Cmp, And, Or, Not)


def is_boolean(e: Expr) -> bool:
    return isinstance(e, _BOOLEAN)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\|\||&&|<=|>=|==|[<>!+\-*/()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character {text[pos:].lstrip()[:1]!r} in {text!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    out.append(("end", ""))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str]:
        return self.toks[self.i]

    def take(self, value: str | None = None) -> tuple[str, str]:
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            raise ExprError(f"expected {value!r}, found {tok[1] or 'end of input'!r} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.or_()
        if self.peek()[0] != "end":
            raise ExprError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return e

    def or_(self) -> Expr:
        e = self.and_()
        while self.peek()[1] == "||":
            self.take()
            e = Or(_want_bool(e, "||"), _want_bool(self.and_(), "||"))
        return e

    def and_(self) -> Expr:
        e = self.unary()
        while self.peek()[1] == "&&":
            self.take()
            e = And(_want_bool(e, "&&"), _want_bool(self.unary(), "&&"))
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "!":
            self.take()
            return Not(_want_bool(self.unary(), "!"))
        return self.cmp()

    def cmp(self) -> Expr:
        e = self.sum()
        if self.peek()[1] in ("<=", "<", ">=", ">", "=="):
            op = self.take()[1]
            e = Cmp(op, _want_num(e, op), _want_num(self.sum(), op))
        return e

    def sum(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            e = Arith(op, _want_num(e, op), _want_num(self.term(), op))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            e = Arith(op, _want_num(e, op), _want_num(self.factor(), op))
        return e

    def factor(self) -> Expr:
        kind, val = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val == "abs":
                self.take("(")
                e = self.or_()
                self.take(")")
                return Abs(_want_num(e, "abs"))
            return Sig(val)
        if val == "(":
            e = self.or_()
            self.take(")")
            return e
        if val == "-":
            return Neg(_want_num(self.factor(), "-"))
        raise ExprError(f"unexpected {val or 'end of input'!r} in {self.text!r}")


def _want_bool(e: Expr, op: str) -> Expr:
    if not is_boolean(e):
        raise ExprError(f"operator {op!r} needs a boolean operand, got {unparse(e)!r}")
    return e


def _want_num(e: Expr, op: str) -> Expr:
    if is_boolean(e):
        raise ExprError(f"operator {op!r} needs a numeric operand, got {unparse(e)!r}")
    return e


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


def unparse(e: Expr) -> str:
    """Fully parenthesised source text that parses back to ``e``."""
    if isinstance(e, Num):
        return repr(e.value) if e.value >= 0 else f"-{-e.value!r}"
    if isinstance(e, Sig):
        return e.name
    if isinstance(e, Arith):
        return f"({unparse(e.left)} {e.op} {unparse(e.right)})"
    if isinstance(e, Cmp):
        return f"({unparse(e.left)} {e.op} {unparse(e.right)})"
    if isinstance(e, Neg):
        return f"-({unparse(e.arg)})"
    if isinstance(e, Abs):
        return f"abs({unparse(e.arg)})"
    if isinstance(e, And):
        return f"({unparse(e.left)} && {unparse(e.right)})"
    if isinstance(e, Or):
        return f"({unparse(e.left)} || {unparse(e.right)})"
    if isinstance(e, Not):
        return f"!({unparse(e.arg)})"
    raise TypeError(e)


def signals(e: Expr) -> set[str]:
    if isinstance(e, Sig):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Abs, Not)):
        return signals(e.arg)
    return signals(e.left) | signals(e.right)


# ---------------------------------------------------------------- robustness


def _value(e: Expr, env: Mapping[str, np.ndarray], tol: float) -> np.ndarray:
    if isinstance(e, Num):
        return np.asarray(e.value)
    if isinstance(e, Sig):
        try:
            return np.asarray(env[e.name], dtype=float)
        except KeyError:
            raise UnknownSignal(e.name) from None
    if isinstance(e, Neg):
        return -_value(e.arg, env, tol)
    if isinstance(e, Abs):
        return np.abs(_value(e.arg, env, tol))
    if isinstance(e, Arith):
        a, b = _value(e.left, env, tol), _value(e.right, env, tol)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(b == 0):
            raise DivisionByZero(f"division by zero in {unparse(e)}")
        return a / b
    if isinstance(e, Cmp):
        a, b = _value(e.left, env, tol), _value(e.right, env, tol)
        if e.op in ("<=", "<"):
            return b - a
        if e.op in (">=", ">"):
            return a - b
        return tol - np.abs(a - b)
    if isinstance(e, And):
        return np.minimum(_value(e.left, env, tol), _value(e.right, env, tol))
    if isinstance(e, Or):
        return np.maximum(_value(e.left, env, tol), _value(e.right, env, tol))
    if isinstance(e, Not):
        return -_value(e.arg, env, tol)
    raise TypeError(e)


def robustness_series(e: Expr, trace: Mapping[str, np.ndarray], tol: float = DEFAULT_TOL) -> np.ndarray:
    """Robustness of ``e`` at every step of ``trace`` (a name -> array mapping)."""
    names = signals(e)
    steps = None
    for n in names:
        if n in trace:
            steps = len(trace[n])
            break
    v = _value(e, trace, tol)
    if v.ndim == 0 and steps is not None:
        v = np.full(steps, float(v))
    return v


def robustness(e: Expr, trace: Mapping[str, np.ndarray], step: int, tol: float = DEFAULT_TOL) -> float:
    env = {n: np.asarray(trace[n])[step] for n in signals(e) if n in trace}
    missing = signals(e) - set(env)
    if missing:
        raise UnknownSignal(sorted(missing)[0])
    return float(_value(e, env, tol))

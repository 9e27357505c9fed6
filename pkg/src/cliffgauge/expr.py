"""Coordinate expressions: parsing, printing and evaluation.

Grammar (lowest to highest binding)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``NAME`` is a declared coordinate, a named parameter, the constant ``pi`` or,
when followed by ``(``, one of the functions in :data:`FUNCTIONS`.

Evaluation works over plain floats and over :class:`~cliffgauge.dual.Dual2`
numbers (exact first and mixed second derivatives).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .dual import Dual2

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh")


class ParseError(ValueError):
    def __init__(self, offset: int, message: str, expected: str | None = None):
        self.offset = offset
        self.message = message
        self.expected = expected
        text = f"{message} at offset {offset}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)


class EvalError(ArithmeticError):
    """Domain error during evaluation; ``node`` is the offending subexpression."""

    def __init__(self, node: "Expr", message: str):
        self.node = node
        self.message = message
        super().__init__(f"{message} in '{pretty(node)}' (offset {node.offset})")


@dataclass(frozen=True)
class Num:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Sym:
    """Reference to a declared coordinate."""
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Const:
    """Named constant: ``pi`` or a metric parameter."""
    name: str
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    offset: int = field(default=0, compare=False)


Expr = Union[Num, Sym, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | name | op | end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:]
            stripped = rest.lstrip()
            if not stripped:
                toks.append(_Tok("end", "", len(text)))
                return toks
            raise ParseError(len(text) - len(stripped), f"unexpected character {stripped[0]!r}")
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()


class _Parser:
    def __init__(self, text, coordinates, parameters):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.coordinates = set(coordinates)
        self.parameters = dict(parameters or {})

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(self.tok.offset, f"unexpected {self._describe(self.tok)}", repr(text))
        return self.advance()

    @staticmethod
    def _describe(tok: _Tok) -> str:
        return "end of input" if tok.kind == "end" else repr(tok.text)

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(self.tok.offset, f"unexpected {self._describe(self.tok)}",
                             "operator or end of input")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            t = self.advance()
            node = BinOp(t.text, node, self.term(), t.offset)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            t = self.advance()
            node = BinOp(t.text, node, self.unary(), t.offset)
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            t = self.advance()
            return Neg(self.unary(), t.offset)
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            t = self.advance()
            return BinOp("^", base, self.unary(), t.offset)
        return base

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text), t.offset)
        if t.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise ParseError(t.offset, f"unknown function {t.text!r}",
                                     "one of " + ", ".join(FUNCTIONS))
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg, t.offset)
            if t.text in self.coordinates:
                return Sym(t.text, t.offset)
            if t.text in self.parameters:
                return Const(t.text, float(self.parameters[t.text]), t.offset)
            if t.text == "pi":
                return Const("pi", math.pi, t.offset)
            if t.text in FUNCTIONS:
                raise ParseError(self.tok.offset, f"function {t.text!r} needs an argument", "'('")
            raise ParseError(t.offset, f"undeclared symbol {t.text!r}", "a declared coordinate")
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(t.offset, f"unexpected {self._describe(t)}", "number, name or '('")


def parse(text: str, coordinates: Sequence[str] = (),
          parameters: Mapping[str, float] | None = None) -> Expr:
    """Parse ``text``; names must be coordinates, parameters, ``pi`` or functions."""
    if not text.strip():
        raise ParseError(0, "empty expression", "an expression")
    return _Parser(text, coordinates, parameters).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def pretty(node: Expr) -> str:
    """Fully parenthesised text that reparses to an equal tree."""
    if isinstance(node, Num):
        v = node.value
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(node, (Sym, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{pretty(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    return f"({pretty(node.left)} {node.op} {pretty(node.right)})"


def symbols(node: Expr) -> set[str]:
    """Coordinate names referenced by ``node``."""
    if isinstance(node, Sym):
        return {node.name}
    if isinstance(node, Neg):
        return symbols(node.operand)
    if isinstance(node, Call):
        return symbols(node.arg)
    if isinstance(node, BinOp):
        return symbols(node.left) | symbols(node.right)
    return set()


def _nonpositive(x) -> bool:
    re_ = x.re if isinstance(x, Dual2) else x
    return bool(np.any(np.asarray(re_) <= 0))


def _is_zero(x) -> bool:
    re_ = x.re if isinstance(x, Dual2) else x
    return bool(np.any(np.asarray(re_) == 0))


def _call(node: Call, x):
    name = node.func
    if name == "log" and _nonpositive(x):
        raise EvalError(node, "log of non-positive value")
    if name == "sqrt":
        re_ = x.re if isinstance(x, Dual2) else x
        if bool(np.any(np.asarray(re_) < 0)) or (isinstance(x, Dual2) and _is_zero(x)):
            raise EvalError(node, "sqrt outside its domain")
    if isinstance(x, Dual2):
        return getattr(x, name)()
    return getattr(math, name)(x)


def _power(node: BinOp, base, exponent):
    if not isinstance(exponent, Dual2) and float(exponent).is_integer():
        n = int(exponent)
        if isinstance(base, Dual2):
            if n < 0 and _is_zero(base):
                raise EvalError(node, "division by zero")
            return base.ipow(n)
        if n < 0 and base == 0:
            raise EvalError(node, "division by zero")
        return float(base) ** n
    # non-integer exponent: exp(y log x), positive bases only
    if _nonpositive(base):
        raise EvalError(node, "non-integer power of non-positive base")
    y = exponent * (base.log() if isinstance(base, Dual2) else math.log(base))
    return y.exp() if isinstance(y, Dual2) else math.exp(y)


def evaluate(node: Expr, env: Mapping[str, object]):
    """Evaluate over whatever numbers ``env`` maps the coordinates to.

    Subtrees without coordinates stay plain floats.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Sym):
        try:
            return env[node.name]
        except KeyError:
            raise EvalError(node, f"no value for coordinate {node.name!r}") from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, Call):
        return _call(node, evaluate(node.arg, env))
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if _is_zero(b):
            raise EvalError(node, "division by zero")
        return a / b
    return _power(node, a, b)


def eval_float(node: Expr, point: Mapping[str, float]) -> float:
    return float(evaluate(node, point))


def eval_dual2(node: Expr, point: Mapping[str, float], first: str, second: str) -> Dual2:
    """Value, derivatives along coordinates ``first`` and ``second`` and the mixed one."""
    env = {name: Dual2(float(x), float(name == first), float(name == second), 0.0)
           for name, x in point.items()}
    out = evaluate(node, env)
    return out if isinstance(out, Dual2) else Dual2(float(out))

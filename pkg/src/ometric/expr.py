"""Minimal arithmetic grammar for ω operations, distances, sequences and maps.

Grammar (highest binding last)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom (("^" | "**") unary)?
    atom   := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

``^`` is right associative and binds tighter than a leading minus, so
``-2^2 == -4``.  Functions: ``abs``, ``exp``, ``ln``, ``max``, ``min``
(``max``/``min`` take two or more arguments).  Constants: ``pi``, ``e``.
Any other name must be one of the declared variables.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Sequence

__all__ = ["Expression", "ExpressionError", "compile_expr"]


class ExpressionError(ValueError):
    """Raised for syntax errors and for evaluation failures (e.g. ``ln(0)``)."""


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)

_CONSTANTS = {"pi": math.pi, "e": math.e}


def _div(x, y):
    if y == 0:
        raise ExpressionError("division by zero")
    return x / y


def _pow(x, y):
    try:
        r = x**y
    except ZeroDivisionError:
        raise ExpressionError("zero raised to a negative power") from None
    except OverflowError:
        return math.inf
    if isinstance(r, complex):
        raise ExpressionError(f"non-real power {x}^{y}")
    return r


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _ln(x):
    if x <= 0:
        raise ExpressionError(f"ln of non-positive value {x}")
    return math.log(x)


_FUNCTIONS: dict[str, tuple[Callable, int]] = {
    "abs": (abs, 1),
    "exp": (_exp, 1),
    "ln": (_ln, 1),
    "max": (max, -2),
    "min": (min, -2),
}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {text[pos:].strip()[:1]!r} at {pos}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = list(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ExpressionError(f"expected {value!r} at {tok[2]}, found {tok[1] or 'end'!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionError(f"unexpected {tok[1]!r} at {tok[2]}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = _bin(node, rhs, (lambda x, y: x + y) if op == "+" else (lambda x, y: x - y))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = _bin(node, rhs, (lambda x, y: x * y) if op == "*" else _div)
        return node

    def unary(self):
        op = self.peek()[1]
        if op in ("+", "-") and self.peek()[0] == "op":
            self.take()
            inner = self.unary()
            return inner if op == "+" else (lambda env: -inner(env))
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            exponent = self.unary()
            return _bin(base, exponent, _pow)
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "num":
            c = float(value)
            return lambda env: c
        if kind == "name":
            if self.peek()[1] == "(":
                return self.call(value, pos)
            if value in self.variables:
                idx = self.variables.index(value)
                return lambda env: env[idx]
            if value in _CONSTANTS:
                c = _CONSTANTS[value]
                return lambda env: c
            raise ExpressionError(
                f"unknown name {value!r} at {pos}; variables are {', '.join(self.variables) or 'none'}"
            )
        if value == "(":
            node = self.expr()
            self.take(")")
            return node
        raise ExpressionError(f"unexpected {value or 'end'!r} at {pos}")

    def call(self, name, pos):
        if name not in _FUNCTIONS:
            raise ExpressionError(f"unknown function {name!r} at {pos}")
        fn, arity = _FUNCTIONS[name]
        self.take("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        if arity > 0 and len(args) != arity:
            raise ExpressionError(f"{name} takes {arity} argument(s), got {len(args)}")
        if arity < 0 and len(args) < -arity:
            raise ExpressionError(f"{name} takes at least {-arity} arguments")
        if len(args) == 1:
            (a,) = args
            return lambda env: fn(a(env))
        return lambda env: fn(*(a(env) for a in args))


def _bin(lhs, rhs, op):
    return lambda env: op(lhs(env), rhs(env))


class Expression:
    """A compiled expression, callable with one positional argument per variable."""

    __slots__ = ("source", "variables", "_fn")

    def __init__(self, source: str, variables: Sequence[str]):
        self.source = source
        self.variables = tuple(variables)
        self._fn = _Parser(source, self.variables).parse()

    def __call__(self, *args: float) -> float:
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments, got {len(args)}")
        try:
            return float(self._fn(args))
        except OverflowError:
            return math.inf

    def __repr__(self):
        return f"Expression({self.source!r}, variables={self.variables})"


def compile_expr(source: str, variables: Sequence[str] = ("u", "v")) -> Expression:
    return Expression(source, variables)

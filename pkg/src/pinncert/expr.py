"""Arithmetic expressions over ``x`` with exact symbolic differentiation.

Coefficients and sources of a boundary value problem are written as text,
e.g. ``"-k*x"`` or ``"(eps*pi^2 + lambda)*sin(pi*x)"``.  The grammar is::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" term | power
    power  := atom ("^" unary)?
    atom   := number | name | func "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus and is right-associative.  A leading
minus negates the whole product that follows it, so ``-k*x`` is
``-(k*x)``.  Exponents must fold to nonnegative integer literals so that
differentiation stays inside the grammar.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

FUNCTIONS = ("sin", "cos", "exp")
CONSTANTS = {"pi": math.pi}


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at byte offset {offset}")
        self.name = name
        self.offset = offset


class EvalError(ExprError):
    """Raised on division by zero or an unbound parameter during evaluation."""


# -- AST ---------------------------------------------------------------------


class Expr:
    """Immutable expression node.  Subclasses are frozen dataclasses."""

    def eval(self, x, bindings: Mapping[str, float] | None = None):
        """Evaluate at ``x`` (scalar or array).  Returns a float or an ndarray."""
        bindings = {} if bindings is None else bindings
        xa = np.asarray(x, dtype=float)
        out = self._eval(xa, bindings)
        out = np.broadcast_to(out, xa.shape)
        if xa.ndim == 0:
            return float(out)
        return np.array(out, dtype=float)

    def __call__(self, x, bindings: Mapping[str, float] | None = None):
        return self.eval(x, bindings)

    def diff(self) -> Expr:
        return diff(self)

    def params(self) -> frozenset[str]:
        """Names of the free parameters (everything except ``x`` and ``pi``)."""
        return frozenset(_walk_params(self))

    def __str__(self) -> str:
        return to_text(self)

    def _eval(self, x, b):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def _eval(self, x, b):
        return self.value


@dataclass(frozen=True)
class Var(Expr):
    def _eval(self, x, b):
        return x


@dataclass(frozen=True)
class Const(Expr):
    """Named built-in constant such as ``pi``."""

    name: str

    def _eval(self, x, b):
        return CONSTANTS[self.name]


@dataclass(frozen=True)
class Param(Expr):
    name: str

    def _eval(self, x, b):
        try:
            return float(b[self.name])
        except KeyError:
            raise EvalError(f"unbound parameter {self.name!r}") from None


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def _eval(self, x, b):
        return -self.arg._eval(x, b)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def _eval(self, x, b):
        lhs = self.left._eval(x, b)
        rhs = self.right._eval(x, b)
        if self.op == "+":
            return lhs + rhs
        if self.op == "-":
            return lhs - rhs
        if self.op == "*":
            return lhs * rhs
        zero = np.asarray(rhs) == 0.0
        if np.any(zero):
            xs, zero = np.broadcast_arrays(x, zero)
            raise EvalError(f"division by zero in {to_text(self)} at x={float(xs[zero][0])!r}")
        return lhs / rhs


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def _eval(self, x, b):
        return self.base._eval(x, b) ** self.exponent


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def _eval(self, x, b):
        return getattr(np, self.name)(self.arg._eval(x, b))


ZERO = Num(0.0)
ONE = Num(1.0)
X = Var()


def _walk_params(e: Expr):
    if isinstance(e, Param):
        yield e.name
    elif isinstance(e, (Neg, Func)):
        yield from _walk_params(e.arg)
    elif isinstance(e, BinOp):
        yield from _walk_params(e.left)
        yield from _walk_params(e.right)
    elif isinstance(e, Pow):
        yield from _walk_params(e.base)


# -- constant folding constructors -------------------------------------------


def _is_literal(e: Expr) -> bool:
    return isinstance(e, Num)


def neg(a: Expr) -> Expr:
    if _is_literal(a):
        return Num(-a.value)
    return Neg(a)


def binop(op: str, a: Expr, b: Expr) -> Expr:
    if _is_literal(a) and _is_literal(b):
        if op == "/" and b.value == 0.0:
            raise EvalError(f"division by zero in literal {to_text(a)}/{to_text(b)}")
        return Num(BinOp(op, a, b)._eval(0.0, {}))
    return BinOp(op, a, b)


def power(a: Expr, n: int) -> Expr:
    if _is_literal(a):
        return Num(a.value**n)
    return Pow(a, n)


def func(name: str, a: Expr) -> Expr:
    if _is_literal(a):
        return Num(float(getattr(np, name)(a.value)))
    return Func(name, a)


# Zero/one elimination is used only while building derivatives, which
# otherwise fill up with 0*u and 1*u terms.


def _add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return binop("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if b == ZERO:
        return a
    if a == ZERO:
        return neg(b)
    return binop("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return binop("*", a, b)


def _neg(a: Expr) -> Expr:
    return ZERO if a == ZERO else neg(a)


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, source: str, params: frozenset[str]):
        self.source = source
        self.params = params
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(source):
            if source[pos:].strip() == "":
                break
            m = _TOKEN.match(source, pos)
            if m is None or m.end() == pos:
                skip = len(source[pos:]) - len(source[pos:].lstrip())
                bad = source[pos + skip]
                raise ExprSyntaxError(f"unexpected character {bad!r}", self._byte(pos + skip))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), self._byte(m.start(kind))))
            pos = m.end()
        self.tokens.append(("end", "", self._byte(len(source))))
        self.i = 0

    def _byte(self, char_index: int) -> int:
        return len(self.source[:char_index].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, value, offset = self.take()
        if value != text or kind == "end":
            found = "end of input" if kind == "end" else repr(value)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", offset)

    def parse(self) -> Expr:
        e = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {value!r}", offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = binop(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = binop(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return neg(self.term())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            offset = self.take()[2]
            exponent = self.unary()
            if not isinstance(exponent, Num):
                raise ExprSyntaxError("exponent must be a nonnegative integer literal", offset)
            n = exponent.value
            if n < 0 or n != int(n):
                raise ExprSyntaxError(f"exponent {n!r} is not a nonnegative integer", offset)
            return power(base, int(n))
        return base

    def atom(self) -> Expr:
        kind, value, offset = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(value, arg)
            if value == "x":
                return X
            if value in CONSTANTS:
                return Const(value)
            if value in self.params:
                return Param(value)
            raise UnknownIdentifierError(value, offset)
        if (kind, value) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"unexpected {found}", offset)


def parse(source: str, params=()) -> Expr:
    """Parse ``source`` into an :class:`Expr`.

    ``params`` lists the parameter names that may appear besides ``x`` and
    ``pi``.  Raises :class:`ExprSyntaxError` (with a byte offset) or
    :class:`UnknownIdentifierError`.
    """
    return _Parser(source, frozenset(params)).parse()


# -- printing ----------------------------------------------------------------


def to_text(e: Expr) -> str:
    """Fully parenthesised text that :func:`parse` reads back to the same tree."""
    if isinstance(e, Num):
        text = repr(e.value)
        if text in ("inf", "-inf", "nan"):
            raise ExprError(f"non-finite literal {text}")
        return f"({text})" if e.value < 0 or text.startswith("-") else text
    if isinstance(e, Var):
        return "x"
    if isinstance(e, (Const, Param)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)}^{e.exponent})"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


# -- differentiation ---------------------------------------------------------


def diff(e: Expr) -> Expr:
    """Exact derivative with respect to ``x``; parameters are constants."""
    if isinstance(e, Var):
        return ONE
    if isinstance(e, (Num, Const, Param)):
        return ZERO
    if isinstance(e, Neg):
        return _neg(diff(e.arg))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        du, dv = diff(u), diff(v)
        if e.op == "+":
            return _add(du, dv)
        if e.op == "-":
            return _sub(du, dv)
        if e.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        # (u/v)' = u'/v - u v'/v^2
        return _sub(binop("/", du, v) if du != ZERO else ZERO,
                    binop("/", _mul(u, dv), power(v, 2)) if dv != ZERO else ZERO)
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            return ZERO
        inner = ONE if n == 1 else _mul(Num(float(n)), power(e.base, n - 1) if n > 2 else e.base)
        return _mul(inner, diff(e.base))
    if isinstance(e, Func):
        du = diff(e.arg)
        if e.name == "sin":
            outer = Func("cos", e.arg)
        elif e.name == "cos":
            outer = Neg(Func("sin", e.arg))
        else:
            outer = e
        return _mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")

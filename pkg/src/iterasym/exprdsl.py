"""A tiny expression language for one-variable recurrence maps.

Grammar (``^`` is right-associative; unary minus binds tighter than ``*``
but looser than ``^``, so ``-x^2`` is ``-(x^2)``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := atom ("^" unary)?
    atom    := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := "sqrt" | "exp" | "ln"

Numbers are integers or decimals and are read as exact rationals; ``a/b``
between two literals folds to a single rational literal.  Exponents must fold
to a rational constant.  Exactly one variable name is allowed per expression
(``x`` or ``y`` by default).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import gmpy2

from .seriescore.constpoly import ConstPoly

DEFAULT_VARS = ("x", "y")
FUNCTIONS = ("sqrt", "exp", "ln")
GUARD_BITS = 64


class ParseError(ValueError):
    """Syntax or vocabulary error, with the 0-based character position."""

    def __init__(self, message: str, pos: int | None = None, kind: str = "syntax"):
        self.pos = pos
        self.kind = kind
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"{message}{where}")


class DomainError(ArithmeticError):
    """A subexpression left the domain of its function (ln(0), 1/0, ...)."""


class PrecisionUnderflow(ArithmeticError):
    """Cancellation ate more bits than the guard budget."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: Fraction


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow, Func]
BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Func)):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.left) | variables(e.right)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - regex always matches non-space
            raise ParseError("unexpected input", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            tokens.append(("num", m.group(1), start))
        elif m.group(2):
            tokens.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", start)
            tokens.append(("op", ch, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: tuple[str, ...]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed
        self.seen_var: str | None = None

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.next()
        if v != value or kind == "end":
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {v!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()[1]
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.next()[1]
            right = self.unary()
            left = Mul(left, right) if op == "*" else _make_div(left, right, self.tokens[self.i - 1][2])
        return left

    def unary(self) -> Expr:
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.next()
            arg = self.unary()
            return Num(-arg.value) if isinstance(arg, Num) else Neg(arg)
        if kind == "op" and v == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            pos = self.next()[2]
            exponent = self.unary()
            return Pow(base, _fold_exponent(exponent, pos))
        return base

    def atom(self) -> Expr:
        kind, v, pos = self.next()
        if kind == "num":
            return Num(Fraction(v))
        if kind == "name":
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(v, arg)
            if v not in self.allowed:
                raise ParseError(f"unknown identifier {v}", pos, kind="identifier")
            if self.seen_var is not None and self.seen_var != v:
                raise ParseError(
                    f"unknown identifier {v} (expression already uses {self.seen_var})", pos, kind="identifier"
                )
            self.seen_var = v
            return Var(v)
        if kind == "op" and v == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {v or 'end of input'!r}", pos)


def _make_div(left: Expr, right: Expr, pos: int) -> Expr:
    if isinstance(left, Num) and isinstance(right, Num):
        if right.value == 0:
            raise DomainError(f"division by zero literal at position {pos}")
        return Num(left.value / right.value)
    return Div(left, right)


def _fold_exponent(e: Expr, pos: int) -> Fraction:
    """Reduce an exponent expression to an exact rational."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        return -_fold_exponent(e.arg, pos)
    if isinstance(e, (Add, Sub, Mul, Div)):
        a, b = _fold_exponent(e.left, pos), _fold_exponent(e.right, pos)
        if isinstance(e, Add):
            return a + b
        if isinstance(e, Sub):
            return a - b
        if isinstance(e, Mul):
            return a * b
        if b == 0:
            raise DomainError(f"division by zero in exponent at position {pos}")
        return a / b
    if isinstance(e, Pow) and e.exponent.denominator == 1:
        return _fold_exponent(e.base, pos) ** int(e.exponent)
    raise ParseError("irrational exponent: exponents must be rational constants", pos, kind="exponent")


def parse(text: str, var: str | tuple[str, ...] | None = None) -> Expr:
    """Parse ``text`` into an :data:`Expr`.

    ``var`` names the admissible variable (or a tuple of candidates, of which
    at most one may occur); by default ``x`` or ``y``.
    """
    allowed = DEFAULT_VARS if var is None else ((var,) if isinstance(var, str) else tuple(var))
    return _Parser(text, allowed).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _rat(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator) if q >= 0 else f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def to_text(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(e, Num):
        return _rat(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, Pow):
        return f"{_wrap(e.base)}^{_rat(e.exponent)}"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    return f"({to_text(e.left)} {BINARY[type(e)]} {to_text(e.right)})"


def _wrap(e: Expr) -> str:
    text = to_text(e)
    if isinstance(e, Pow) or not (isinstance(e, (Var, Func)) or text.startswith("(")):
        return f"({text})"
    return text


# ---------------------------------------------------------------------------
# Numeric evaluation
# ---------------------------------------------------------------------------


def _rational_pow(v, q: Fraction):
    if q.denominator == 1:
        if v == 0 and q < 0:
            raise DomainError("zero to a negative power")
        return v ** int(q)
    if v < 0:
        raise DomainError("negative base with fractional exponent")
    if v == 0:
        if q < 0:
            raise DomainError("zero to a negative power")
        return v * 0
    return gmpy2.rootn(v, q.denominator) ** q.numerator


def _check_cancel(a, b, r, budget: int):
    if budget <= 0 or not a or not b:
        return
    if not r:
        # exact zero: left to the domain checks downstream (ln(0), 1/0)
        return
    lost = max(gmpy2.get_exp(a), gmpy2.get_exp(b)) - gmpy2.get_exp(r)
    if lost > budget:
        raise PrecisionUnderflow(f"cancellation lost {lost} bits (budget {budget})")


def compile_expr(e: Expr, cancel_budget: int = 0) -> Callable:
    """Compile to a closure over ``gmpy2.mpfr`` values in the active context.

    With ``cancel_budget > 0`` every addition checks how many leading bits
    cancelled and raises :class:`PrecisionUnderflow` past the budget.
    """
    if isinstance(e, Num):
        q = gmpy2.mpq(e.value.numerator, e.value.denominator)
        return lambda v: gmpy2.mpfr(q)
    if isinstance(e, Var):
        return lambda v: v
    if isinstance(e, Neg):
        f = compile_expr(e.arg, cancel_budget)
        return lambda v: -f(v)
    if isinstance(e, Pow):
        f = compile_expr(e.base, cancel_budget)
        q = e.exponent
        return lambda v: _rational_pow(f(v), q)
    if isinstance(e, Func):
        f = compile_expr(e.arg, cancel_budget)
        if e.name == "sqrt":
            def sqrt_(v):
                a = f(v)
                if a < 0:
                    raise DomainError("sqrt of a negative number")
                return gmpy2.sqrt(a)
            return sqrt_
        if e.name == "exp":
            return lambda v: gmpy2.exp(f(v))

        def ln_(v):
            a = f(v)
            if a <= 0:
                raise DomainError("ln of a nonpositive number")
            return gmpy2.log(a)
        return ln_
    fl = compile_expr(e.left, cancel_budget)
    fr = compile_expr(e.right, cancel_budget)
    if isinstance(e, Mul):
        return lambda v: fl(v) * fr(v)
    if isinstance(e, Div):
        def div_(v):
            d = fr(v)
            if not d:
                raise DomainError("division by zero")
            return fl(v) / d
        return div_
    sign = 1 if isinstance(e, Add) else -1
    if cancel_budget:
        def add_checked(v):
            a, b = fl(v), fr(v)
            r = a + b if sign > 0 else a - b
            _check_cancel(a, b, r, cancel_budget)
            return r
        return add_checked
    if sign > 0:
        return lambda v: fl(v) + fr(v)
    return lambda v: fl(v) - fr(v)


def evaluate(e: Expr, point, precision: int = 128):
    """Value of ``e`` at ``point`` rounded to ``precision`` bits.

    Work is done with ``GUARD_BITS`` extra bits; every operation is correctly
    rounded at the working precision, so for the shallow trees this DSL is
    meant for the final rounding dominates and the result is within a few
    units in the last place.  Cancellation beyond the guard raises
    :class:`PrecisionUnderflow`.
    """
    if precision < 2:
        raise ValueError("precision must be at least 2 bits")
    if isinstance(point, Fraction):
        point = gmpy2.mpq(point.numerator, point.denominator)
    fn = compile_expr(e, cancel_budget=GUARD_BITS)
    with gmpy2.context(gmpy2.get_context(), precision=precision + GUARD_BITS):
        value = fn(gmpy2.mpfr(point))
    with gmpy2.context(gmpy2.get_context(), precision=precision):
        return +value


# ---------------------------------------------------------------------------
# Exact conversion to a polynomial in the variable
# ---------------------------------------------------------------------------


def to_constpoly(e: Expr) -> ConstPoly:
    """Read a polynomial expression (``-(1/2 + 4*C)`` style) as a ConstPoly."""
    if isinstance(e, Num):
        return ConstPoly.const(e.value)
    if isinstance(e, Var):
        return ConstPoly.symbol()
    if isinstance(e, Neg):
        return -to_constpoly(e.arg)
    if isinstance(e, Add):
        return to_constpoly(e.left) + to_constpoly(e.right)
    if isinstance(e, Sub):
        return to_constpoly(e.left) - to_constpoly(e.right)
    if isinstance(e, Mul):
        return to_constpoly(e.left) * to_constpoly(e.right)
    if isinstance(e, Div):
        d = to_constpoly(e.right)
        if not d.is_const() or d.is_zero():
            raise ValueError("polynomial division only by nonzero constants")
        return to_constpoly(e.left) / d.constant_term()
    if isinstance(e, Pow):
        if e.exponent.denominator != 1 or e.exponent < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        return to_constpoly(e.base) ** int(e.exponent)
    raise ValueError(f"{e.name} is not polynomial")


def poly(text: str, var: str = "C") -> ConstPoly:
    return to_constpoly(parse(text, var))


eval_expr = evaluate

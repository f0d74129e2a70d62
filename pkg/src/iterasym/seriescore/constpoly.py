"""Polynomials over the rationals in a single formal constant.

Every coefficient of an asymptotic expansion is a polynomial in the free
constant (``C`` after normalization, ``kappa`` while solving).  The type is a
small immutable value with the handful of operations the solver needs.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

import gmpy2

Scalar = Union[int, Fraction]

MAX_DEGREE = 64


def _trim(coeffs: Iterable[Fraction]) -> tuple[Fraction, ...]:
    out = list(coeffs)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


class ConstPoly:
    """``c0 + c1*C + c2*C^2 + ...`` with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        trimmed = _trim(Fraction(c) for c in coeffs)
        if len(trimmed) > MAX_DEGREE + 1:
            raise ValueError(f"ConstPoly degree exceeds bound {MAX_DEGREE}")
        self.coeffs = trimmed

    @classmethod
    def const(cls, value: Scalar) -> "ConstPoly":
        return cls((value,))

    @classmethod
    def symbol(cls) -> "ConstPoly":
        return cls((0, 1))

    # -- structure -----------------------------------------------------
    @property
    def degree(self) -> int:
        """Degree; the zero polynomial has degree -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_const(self) -> bool:
        return len(self.coeffs) <= 1

    def constant_term(self) -> Fraction:
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ConstPoly.const(other)
        if not isinstance(other, ConstPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other: "ConstPoly | Scalar") -> "ConstPoly":
        other = _coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return ConstPoly(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "ConstPoly":
        return ConstPoly(-c for c in self.coeffs)

    def __sub__(self, other: "ConstPoly | Scalar") -> "ConstPoly":
        return self + (-_coerce(other))

    def __rsub__(self, other: Scalar) -> "ConstPoly":
        return _coerce(other) - self

    def __mul__(self, other: "ConstPoly | Scalar") -> "ConstPoly":
        if isinstance(other, (int, Fraction)):
            return ConstPoly(c * other for c in self.coeffs)
        if not self.coeffs or not other.coeffs:
            return ConstPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return ConstPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "ConstPoly":
        other = Fraction(other)
        if other == 0:
            raise ZeroDivisionError("ConstPoly division by zero")
        return ConstPoly(c / other for c in self.coeffs)

    def __pow__(self, n: int) -> "ConstPoly":
        if n < 0:
            raise ValueError("negative power of ConstPoly")
        result, base = ConstPoly.const(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def derivative(self) -> "ConstPoly":
        return ConstPoly(i * c for i, c in enumerate(self.coeffs) if i)

    def compose(self, inner: "ConstPoly") -> "ConstPoly":
        """Substitute ``inner`` for the formal constant (Horner)."""
        result = ConstPoly()
        for c in reversed(self.coeffs):
            result = result * inner + c
        return result

    def __call__(self, value):
        """Evaluate at ``value`` (Fraction, int, or any numeric type)."""
        acc = 0 * value
        for c in reversed(self.coeffs):
            acc = acc * value + _numeric_like(c, value)
        return acc

    # -- display -------------------------------------------------------
    def to_json(self) -> list[list[int]]:
        return [[c.numerator, c.denominator] for c in self.coeffs]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[int]]) -> "ConstPoly":
        return cls(Fraction(n, d) for n, d in data)

    def format(self, symbol: str = "C", latex: bool = False) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mag = abs(c)
            if i == 0:
                body = _frac_str(mag, latex)
            else:
                mono = symbol if i == 1 else (f"{symbol}^{{{i}}}" if latex else f"{symbol}^{i}")
                if mag == 1:
                    body = mono
                elif latex:
                    body = _frac_str(mag, latex) + mono
                else:
                    body = f"{_frac_str(mag, latex)}*{mono}"
            parts.append(("-" if c < 0 else "+", body))
        head_sign, head = parts[0]
        text = ("-" if head_sign == "-" else "") + head
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"ConstPoly({self.format()})"


def _frac_str(q: Fraction, latex: bool) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    if latex:
        return f"\\frac{{{q.numerator}}}{{{q.denominator}}}"
    return f"{q.numerator}/{q.denominator}"


def _coerce(x: "ConstPoly | Scalar") -> ConstPoly:
    if isinstance(x, ConstPoly):
        return x
    return ConstPoly.const(x)


def _numeric_like(c: Fraction, value):
    if isinstance(value, (int, Fraction)):
        return c
    if isinstance(value, float):
        return float(c)
    if type(value).__module__.startswith("gmpy2"):
        return gmpy2.mpq(c.numerator, c.denominator)
    return value.__class__(c.numerator) / c.denominator

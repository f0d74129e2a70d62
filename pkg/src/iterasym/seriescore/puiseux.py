"""Truncated Puiseux series at 0 with exact rational coefficients.

A series is a finite map ``exponent -> coefficient`` plus an ``order``: every
term with exponent below ``order`` is known exactly, nothing is claimed
beyond it.  ``order == inf`` marks an exact (finite) expression such as
``1 + y``.  Operations that would produce infinitely many terms from exact
input take an absolute ``cap`` instead.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import gmpy2

INF = math.inf

LATTICE_CAP = 12


class SeriesError(ValueError):
    """Raised when a series operation is undefined for its input."""


class LatticeError(SeriesError):
    pass


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def rational_power(c: Fraction, r: Fraction) -> Fraction:
    """``c**r`` when it is rational, else ``SeriesError``."""
    if r.denominator == 1:
        return c ** int(r)
    if c <= 0:
        raise SeriesError(f"{c}^({r}) is not a positive real rational")
    q = r.denominator
    num, exact_n = gmpy2.iroot(c.numerator, q)
    den, exact_d = gmpy2.iroot(c.denominator, q)
    if not (exact_n and exact_d):
        raise SeriesError(f"{c}^({r}) is irrational")
    return Fraction(int(num), int(den)) ** r.numerator


def binomial(r: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for j in range(n):
        out = out * (r - j) / (j + 1)
    return out


class PuiseuxSeries:
    __slots__ = ("coeffs", "order", "var")

    def __init__(self, coeffs: Mapping | Iterable = (), order=INF, var: str = "y"):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        order = order if order == INF else Fraction(order)
        clean: dict[Fraction, Fraction] = {}
        for e, c in items:
            e, c = Fraction(e), Fraction(c)
            if c != 0 and e < order:
                clean[e] = clean.get(e, Fraction(0)) + c
        self.coeffs = {e: c for e, c in sorted(clean.items()) if c != 0}
        self.order = order
        self.var = var
        if self.lattice > LATTICE_CAP:
            raise LatticeError(f"exponent lattice 1/{self.lattice} exceeds cap 1/{LATTICE_CAP}")

    # -- constructors ----------------------------------------------------
    @classmethod
    def const(cls, c, var: str = "y") -> "PuiseuxSeries":
        return cls({0: c}, INF, var)

    @classmethod
    def monomial(cls, e, c=1, var: str = "y") -> "PuiseuxSeries":
        return cls({e: c}, INF, var)

    # -- structure --------------------------------------------------------
    @property
    def lattice(self) -> int:
        t = 1
        for e in self.coeffs:
            t = _lcm(t, e.denominator)
        return t

    def valuation(self):
        """Smallest exponent carried; ``order`` for the (truncated) zero series."""
        return next(iter(self.coeffs), self.order)

    def is_exact(self) -> bool:
        return self.order == INF

    def __getitem__(self, e) -> Fraction:
        return self.coeffs.get(Fraction(e), Fraction(0))

    def truncate(self, order) -> "PuiseuxSeries":
        return PuiseuxSeries(self.coeffs, min(self.order, order), self.var)

    def support(self) -> list[Fraction]:
        return list(self.coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PuiseuxSeries):
            return NotImplemented
        return self.coeffs == other.coeffs and self.order == other.order

    def agrees_with(self, other: "PuiseuxSeries") -> bool:
        """Equal on the common range of validity."""
        o = min(self.order, other.order)
        return self.truncate(o).coeffs == other.truncate(o).coeffs

    # -- ring operations --------------------------------------------------
    def __add__(self, other) -> "PuiseuxSeries":
        other = _coerce(other, self.var)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, Fraction(0)) + c
        return PuiseuxSeries(out, min(self.order, other.order), self.var)

    __radd__ = __add__

    def __neg__(self) -> "PuiseuxSeries":
        return PuiseuxSeries({e: -c for e, c in self.coeffs.items()}, self.order, self.var)

    def __sub__(self, other) -> "PuiseuxSeries":
        return self + (-_coerce(other, self.var))

    def __rsub__(self, other) -> "PuiseuxSeries":
        return _coerce(other, self.var) - self

    def scale(self, c) -> "PuiseuxSeries":
        c = Fraction(c)
        if c == 0:
            return PuiseuxSeries({}, INF, self.var)
        return PuiseuxSeries({e: c * v for e, v in self.coeffs.items()}, self.order, self.var)

    def mul(self, other, cap=INF) -> "PuiseuxSeries":
        other = _coerce(other, self.var)
        order = min(self.order + other.valuation(), other.order + self.valuation(), cap)
        out: dict[Fraction, Fraction] = {}
        for ea, ca in self.coeffs.items():
            for eb, cb in other.coeffs.items():
                e = ea + eb
                if e < order:
                    out[e] = out.get(e, Fraction(0)) + ca * cb
        return PuiseuxSeries(out, order, self.var)

    def __mul__(self, other) -> "PuiseuxSeries":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return self.mul(other)

    __rmul__ = __mul__

    def shift(self, e) -> "PuiseuxSeries":
        """Multiply by ``var**e``."""
        e = Fraction(e)
        return PuiseuxSeries({k + e: c for k, c in self.coeffs.items()}, self.order + e, self.var)

    def substitute_power(self, t: int, var: str | None = None) -> "PuiseuxSeries":
        """Replace the variable ``y`` by ``u**t``."""
        return PuiseuxSeries({e * t: c for e, c in self.coeffs.items()}, self.order * t, var or self.var)

    # -- unit decomposition ------------------------------------------------
    def unit_parts(self) -> tuple[Fraction, Fraction, "PuiseuxSeries"]:
        """Write the series as ``c * y**v * (1 + h)`` with ``valuation(h) > 0``."""
        if not self.coeffs:
            raise SeriesError("series vanishes to its truncation order; no leading term")
        v, c = next(iter(self.coeffs.items()))
        h = PuiseuxSeries(
            {e - v: a / c for e, a in self.coeffs.items() if e != v}, self.order - v, self.var
        )
        return c, v, h

    def _compose(self, coefficient: Callable[[int], Fraction], rel_order) -> "PuiseuxSeries":
        """``sum_n coefficient(n) * self**n`` for ``valuation(self) > 0``."""
        w = self.valuation()
        if w <= 0:
            raise SeriesError("composition needs positive valuation")
        order = min(self.order, rel_order)
        if order == INF:
            raise SeriesError("infinite expansion requested without a truncation cap")
        result = PuiseuxSeries.const(coefficient(0), self.var).truncate(order)
        power = PuiseuxSeries.const(1, self.var)
        n = 0
        while True:
            n += 1
            power = power.mul(self, order)
            if not power.coeffs:
                break
            a = coefficient(n)
            if a:
                result = result + power.scale(a)
        return result.truncate(order)

    # -- transcendental and power operations -------------------------------
    def invert(self, cap=INF) -> "PuiseuxSeries":
        return self.pow_rational(Fraction(-1), cap)

    def pow_rational(self, r, cap=INF) -> "PuiseuxSeries":
        r = Fraction(r)
        if r == 0:
            return PuiseuxSeries.const(1, self.var)
        if r.denominator == 1 and r > 0 and self.is_exact():
            result, base, n = PuiseuxSeries.const(1, self.var), self, int(r)
            while n:
                if n & 1:
                    result = result.mul(base, cap)
                base = base.mul(base, cap)
                n >>= 1
            return result
        c, v, h = self.unit_parts()
        lead = rational_power(c, r)
        rel = cap - v * r
        body = h._compose(lambda n: binomial(r, n), rel) if h.coeffs else PuiseuxSeries.const(1, self.var).truncate(min(h.order, rel))
        return body.scale(lead).shift(v * r)

    def exp(self, cap=INF) -> "PuiseuxSeries":
        if any(e < 0 for e in self.coeffs):
            raise SeriesError("exp of a series with negative exponents has no Puiseux expansion")
        if self[0] != 0:
            raise SeriesError(f"exp({self[0]}) is not rational")
        if not self.coeffs:
            return PuiseuxSeries.const(1, self.var).truncate(min(self.order, cap))
        return self._compose(lambda n: Fraction(1, math.factorial(n)), cap)

    def log1p(self, cap=INF) -> "PuiseuxSeries":
        if not self.coeffs:
            return PuiseuxSeries({}, min(self.order, cap), self.var)
        if self.valuation() <= 0:
            raise SeriesError("log1p needs positive valuation")
        return self._compose(lambda n: Fraction((-1) ** (n + 1), n) if n else Fraction(0), cap)

    def log(self, cap=INF) -> "PuiseuxSeries":
        c, v, h = self.unit_parts()
        if v != 0:
            raise SeriesError("ln of a series with a zero or pole at 0 has a log(y) term")
        if c <= 0:
            raise SeriesError(f"ln of series with nonpositive constant term {c}")
        if c != 1:
            raise SeriesError(f"ln({c}) is not rational")
        return h.log1p(cap)

    # -- display -----------------------------------------------------------
    def format(self, max_terms: int | None = None) -> str:
        parts = []
        for i, (e, c) in enumerate(self.coeffs.items()):
            if max_terms is not None and i >= max_terms:
                break
            mono = "1" if e == 0 else (self.var if e == 1 else f"{self.var}^({e})")
            parts.append(f"({c})*{mono}" if e != 0 else f"({c})")
        body = " + ".join(parts) or "0"
        if self.order != INF:
            body += f" + O({self.var}^({self.order}))"
        return body

    def __repr__(self) -> str:
        return f"PuiseuxSeries({self.format()})"


def _coerce(x, var: str) -> PuiseuxSeries:
    if isinstance(x, PuiseuxSeries):
        return x
    return PuiseuxSeries.const(x, var)


def p_add(a: PuiseuxSeries, b: PuiseuxSeries) -> PuiseuxSeries:
    return a + b


def p_mul(a: PuiseuxSeries, b: PuiseuxSeries, cap=INF) -> PuiseuxSeries:
    return a.mul(b, cap)


def p_invert_unit(s: PuiseuxSeries, cap=INF) -> PuiseuxSeries:
    if s[0] == 0 or s.valuation() != 0:
        raise SeriesError("inversion needs a unit (nonzero constant term)")
    return s.invert(cap)


def p_pow_rational(s: PuiseuxSeries, r, cap=INF) -> PuiseuxSeries:
    return s.pow_rational(r, cap)


def p_exp(s: PuiseuxSeries, cap=INF) -> PuiseuxSeries:
    return s.exp(cap)


def p_log1p(s: PuiseuxSeries, cap=INF) -> PuiseuxSeries:
    return s.log1p(cap)

"""Asymptotic-scale series in a large index ``k``.

An :class:`AsymSeries` stands for::

    scale * k**r0 * sum_{m, l} terms[m, l] * ln(k)**l * k**(-m)

with exact rational ``r0``, integer inner orders ``0 <= m <= order`` and
log powers ``0 <= l <= m``.  Coefficients are :class:`ConstPoly` values in the
free constant.  ``order`` is the largest inner order that is fully known.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

import gmpy2

from .constpoly import ConstPoly
from .puiseux import binomial
from .scale import ScaleFactor

MAX_ORDER = 24

Key = tuple[int, int]


class AsymError(ValueError):
    pass


class AsymSeries:
    __slots__ = ("scale", "r0", "terms", "order")

    def __init__(
        self,
        terms: Mapping[Key, ConstPoly | int | Fraction],
        order: int,
        r0=0,
        scale: ScaleFactor | None = None,
    ):
        if order < 0 or order > MAX_ORDER:
            raise AsymError(f"truncation order {order} outside [0, {MAX_ORDER}]")
        clean: dict[Key, ConstPoly] = {}
        for (m, l), c in terms.items():
            if not isinstance(c, ConstPoly):
                c = ConstPoly.const(c)
            if c.is_zero() or m > order:
                continue
            if m < 0 or l < 0:
                raise AsymError(f"negative index in term ({m}, {l})")
            if l > m:
                raise AsymError(f"log power {l} exceeds inner order {m}")
            clean[(m, l)] = c
        self.terms = dict(sorted(clean.items()))
        self.order = order
        self.r0 = Fraction(r0)
        self.scale = scale if scale is not None else ScaleFactor.one()

    # -- constructors ----------------------------------------------------
    @classmethod
    def one(cls, order: int) -> "AsymSeries":
        return cls({(0, 0): 1}, order)

    @classmethod
    def from_relative(cls, coeffs: Mapping[Key, ConstPoly | int | Fraction], order: int,
                      r0=0, scale: ScaleFactor | None = None) -> "AsymSeries":
        return cls(coeffs, order, r0, scale)

    # -- structure -------------------------------------------------------
    def __getitem__(self, key: Key) -> ConstPoly:
        return self.terms.get(key, ConstPoly())

    def valuation(self) -> int:
        return min((m for m, _ in self.terms), default=self.order + 1)

    def max_log_power(self, m: int) -> int:
        return max((l for mm, l in self.terms if mm == m), default=-1)

    def truncate(self, order: int) -> "AsymSeries":
        return AsymSeries(self.terms, min(order, self.order), self.r0, self.scale)

    def with_order(self, order: int) -> "AsymSeries":
        """Same terms, declared valid to ``order`` (caller vouches for the missing terms)."""
        return AsymSeries(self.terms, order, self.r0, self.scale)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AsymSeries):
            return NotImplemented
        return (self.scale == other.scale and self.r0 == other.r0
                and self.order == other.order and self.terms == other.terms)

    def agrees_with(self, other: "AsymSeries") -> bool:
        """Equal through the common truncation order (scales compared exactly)."""
        diff = self - other
        return not diff.terms

    def is_zero(self) -> bool:
        return not self.terms

    # -- linear structure ------------------------------------------------
    def map_coeffs(self, fn) -> "AsymSeries":
        return AsymSeries({k: fn(c) for k, c in self.terms.items()}, self.order, self.r0, self.scale)

    def __mul__(self, other) -> "AsymSeries":
        if isinstance(other, AsymSeries):
            return self.mul(other)
        if isinstance(other, ScaleFactor):
            return AsymSeries(self.terms, self.order, self.r0, self.scale * other)
        return self.map_coeffs(lambda c: c * other)

    __rmul__ = __mul__

    def __neg__(self) -> "AsymSeries":
        return self.map_coeffs(lambda c: -c)

    def _aligned(self, other: "AsymSeries") -> tuple["AsymSeries", "AsymSeries"]:
        """Re-express both operands over a common scale and leading power."""
        ratio = other.scale / self.scale
        if not ratio.is_rational():
            raise AsymError(f"scales {self.scale} and {other.scale} differ by an irrational factor")
        d = self.r0 - other.r0
        if d.denominator != 1:
            raise AsymError(f"leading exponents {self.r0} and {other.r0} are not commensurate")
        d = int(d)
        q = ratio.to_rational()
        other = AsymSeries({key: c * q for key, c in other.terms.items()}, other.order, other.r0, self.scale)
        if d >= 0:
            return self, other._relabel(d, self.r0)
        return self._relabel(-d, other.r0), other

    def _relabel(self, d: int, r0: Fraction) -> "AsymSeries":
        terms = {(m + d, l): c for (m, l), c in self.terms.items()}
        return AsymSeries(terms, min(self.order + d, MAX_ORDER), r0, self.scale)

    def __add__(self, other: "AsymSeries") -> "AsymSeries":
        a, b = self._aligned(other)
        order = min(a.order, b.order)
        terms = dict(a.terms)
        for key, c in b.terms.items():
            terms[key] = terms.get(key, ConstPoly()) + c
        return AsymSeries(terms, order, a.r0, a.scale)

    def __sub__(self, other: "AsymSeries") -> "AsymSeries":
        return self + (-other)

    # -- ring operations -------------------------------------------------
    def mul(self, other: "AsymSeries") -> "AsymSeries":
        order = min(self.order + other.valuation(), other.order + self.valuation(), MAX_ORDER)
        terms: dict[Key, ConstPoly] = {}
        for (ma, la), ca in self.terms.items():
            for (mb, lb), cb in other.terms.items():
                m = ma + mb
                if m <= order:
                    key = (m, la + lb)
                    terms[key] = terms.get(key, ConstPoly()) + ca * cb
        return AsymSeries(terms, order, self.r0 + other.r0, self.scale * other.scale)

    def reciprocal(self) -> "AsymSeries":
        v = self.valuation()
        if v > self.order:
            raise AsymError("reciprocal of a series with no nonzero term")
        lead = self[(v, 0)]
        if any(l > 0 for (m, l) in self.terms if m == v):
            raise AsymError("leading part carries a log power; no reciprocal in this scale")
        if lead.is_zero() or not lead.is_const():
            raise AsymError("reciprocal needs a nonzero rational leading coefficient")
        c = lead.constant_term()
        rel_order = self.order - v
        h = AsymSeries({(m - v, l): p / c for (m, l), p in self.terms.items() if (m, l) != (v, 0)},
                       rel_order)
        # 1/(1+h) = sum (-h)^n; h starts at inner order >= 1
        result = AsymSeries.one(rel_order)
        power = AsymSeries.one(rel_order)
        for _ in range(rel_order):
            power = -(power.mul(h))
            if power.is_zero():
                break
            result = result + power
        return AsymSeries(
            {key: p / c for key, p in result.terms.items()},
            rel_order,
            -(self.r0 - v),
            self.scale.inverse(),
        )

    def pow_int(self, n: int) -> "AsymSeries":
        if n < 0:
            return self.reciprocal().pow_int(-n)
        base = self
        result = AsymSeries({(0, 0): 1}, MAX_ORDER)
        while n:
            if n & 1:
                result = result.mul(base)
            base = base.mul(base)
            n >>= 1
        return result

    # -- index shift -----------------------------------------------------
    def shift(self) -> "AsymSeries":
        """Substitute ``k -> k + 1`` and re-expand in the same scale."""
        M = self.order
        log_shift = _log1p_inv_k(M)
        log_powers = [{(0, 0): Fraction(1)}]
        terms: dict[Key, ConstPoly] = {}
        for (m, l), c in self.terms.items():
            while len(log_powers) <= l:
                log_powers.append(_mul_sparse(log_powers[-1], log_shift, M))
            e = self.r0 - Fraction(m)
            # (1 + 1/k)^e
            power_part = {(j, 0): binomial(e, j) for j in range(M - m + 1)}
            # (ln k + L)^l = sum_i binom(l, i) ln(k)^(l-i) L^i
            log_part: dict[Key, Fraction] = {}
            for i in range(l + 1):
                coef = Fraction(_comb(l, i))
                for (j, _), v in log_powers[i].items():
                    key = (j, l - i)
                    log_part[key] = log_part.get(key, Fraction(0)) + coef * v
            for (j, ll), v in _mul_sparse(power_part, log_part, M - m).items():
                if v:
                    key = (m + j, ll)
                    terms[key] = terms.get(key, ConstPoly()) + c * v
        return AsymSeries(terms, M, self.r0, self.scale)

    # -- numerics --------------------------------------------------------
    def evaluate(self, k, C=None, precision: int = 256, derivative: bool = False):
        """Numeric value at index ``k`` (and optionally d/dC) as ``gmpy2.mpfr``."""
        needs_c = any(not c.is_const() for c in self.terms.values())
        if needs_c and C is None:
            raise AsymError("series depends on the free constant but no value for C was supplied")
        with gmpy2.context(gmpy2.get_context(), precision=precision + 32):
            kk = gmpy2.mpfr(k)
            lnk = gmpy2.log(kk)
            inv_k = 1 / kk
            cval = gmpy2.mpfr(C) if C is not None else gmpy2.mpfr(0)
            total = gmpy2.mpfr(0)
            dtotal = gmpy2.mpfr(0)
            for (m, l), c in self.terms.items():
                mono = lnk ** l * inv_k ** m
                total += c(cval) * mono
                if derivative:
                    dc = c.derivative()
                    if not dc.is_zero():
                        dtotal += dc(cval) * mono
            lead = self.scale.value(precision + 32) * _rational_power(kk, self.r0)
            value, dvalue = total * lead, dtotal * lead
        with gmpy2.context(gmpy2.get_context(), precision=precision):
            if derivative:
                return +value, +dvalue
            return +value

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "scale": self.scale.to_json(),
            "r0": [self.r0.numerator, self.r0.denominator],
            "order": self.order,
            "terms": [{"m": m, "l": l, "poly": c.to_json()} for (m, l), c in self.terms.items()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "AsymSeries":
        return cls(
            {(t["m"], t["l"]): ConstPoly.from_json(t["poly"]) for t in data["terms"]},
            data["order"],
            Fraction(*data["r0"]),
            ScaleFactor.from_json(data["scale"]),
        )

    def __repr__(self) -> str:
        from ..render import render_text

        return f"AsymSeries({render_text(self)})"


def _comb(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def _rational_power(x, r: Fraction):
    if r.denominator == 1:
        return x ** int(r)
    return gmpy2.rootn(x, r.denominator) ** r.numerator


def _log1p_inv_k(M: int) -> dict[Key, Fraction]:
    """ln(1 + 1/k) as ``{(j, 0): coeff}`` through inner order ``M``."""
    return {(j, 0): Fraction((-1) ** (j + 1), j) for j in range(1, M + 1)}


def _mul_sparse(a: Mapping[Key, Fraction], b: Mapping[Key, Fraction], M: int) -> dict[Key, Fraction]:
    out: dict[Key, Fraction] = {}
    for (ma, la), ca in a.items():
        for (mb, lb), cb in b.items():
            if ma + mb <= M:
                key = (ma + mb, la + lb)
                out[key] = out.get(key, Fraction(0)) + ca * cb
    return out


def a_mul(a: AsymSeries, b: AsymSeries) -> AsymSeries:
    return a.mul(b)


def a_reciprocal(s: AsymSeries) -> AsymSeries:
    return s.reciprocal()


def a_pow_int(s: AsymSeries, n: int) -> AsymSeries:
    return s.pow_int(n)


def a_shift(s: AsymSeries) -> AsymSeries:
    return s.shift()


def a_eval(s: AsymSeries, k, C=None, precision: int = 256):
    return s.evaluate(k, C, precision)

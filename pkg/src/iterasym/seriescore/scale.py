"""Positive prefactors written as products of prime powers.

The only irrational number an expansion ever carries is a root of a
rational, e.g. ``2**(1/2)`` or ``(4/3)**(3/4)``.  Keeping it factored makes
ratios of such numbers exactly decidable: a product is rational iff every
prime exponent is an integer.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import gmpy2


def factor_int(n: int) -> dict[int, int]:
    """Trial-division factorization; the scale bases here are tiny."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


class ScaleFactor:
    """Formal product ``prod p**e`` over distinct primes with rational ``e``."""

    __slots__ = ("powers",)

    def __init__(self, powers: Mapping[int, Fraction] | None = None):
        clean = {}
        for p, e in (powers or {}).items():
            e = Fraction(e)
            if e != 0:
                clean[int(p)] = e
        self.powers = dict(sorted(clean.items()))

    @classmethod
    def one(cls) -> "ScaleFactor":
        return cls()

    @classmethod
    def from_rational(cls, q, exponent=1) -> "ScaleFactor":
        """``q**exponent`` for positive rational ``q``."""
        q = Fraction(q)
        exponent = Fraction(exponent)
        if q <= 0:
            raise ValueError(f"scale base must be positive, got {q}")
        powers: dict[int, Fraction] = {}
        for p, e in factor_int(q.numerator).items():
            powers[p] = powers.get(p, Fraction(0)) + e * exponent
        for p, e in factor_int(q.denominator).items():
            powers[p] = powers.get(p, Fraction(0)) - e * exponent
        return cls(powers)

    @classmethod
    def from_factors(cls, factors: Iterable[Sequence]) -> "ScaleFactor":
        """Build from ``[(base, exponent), ...]`` with rational bases."""
        result = cls.one()
        for base, exponent in factors:
            result = result * cls.from_rational(Fraction(base), Fraction(exponent))
        return result

    def __mul__(self, other: "ScaleFactor") -> "ScaleFactor":
        powers = dict(self.powers)
        for p, e in other.powers.items():
            powers[p] = powers.get(p, Fraction(0)) + e
        return ScaleFactor(powers)

    def __truediv__(self, other: "ScaleFactor") -> "ScaleFactor":
        return self * other.inverse()

    def inverse(self) -> "ScaleFactor":
        return ScaleFactor({p: -e for p, e in self.powers.items()})

    def __pow__(self, r) -> "ScaleFactor":
        r = Fraction(r)
        return ScaleFactor({p: e * r for p, e in self.powers.items()})

    def is_rational(self) -> bool:
        return all(e.denominator == 1 for e in self.powers.values())

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"scale {self} is irrational")
        out = Fraction(1)
        for p, e in self.powers.items():
            out *= Fraction(p) ** int(e)
        return out

    def split(self) -> tuple[Fraction, "ScaleFactor"]:
        """Return ``(q, s)`` with rational ``q`` and every exponent of ``s`` in (0, 1)."""
        q = Fraction(1)
        rest = {}
        for p, e in self.powers.items():
            whole = e.numerator // e.denominator
            q *= Fraction(p) ** whole
            if e - whole:
                rest[p] = e - whole
        return q, ScaleFactor(rest)

    def value(self, precision: int):
        """Numeric value as a ``gmpy2.mpfr`` at ``precision`` bits."""
        with gmpy2.context(gmpy2.get_context(), precision=precision + 16):
            acc = gmpy2.mpfr(1)
            for p, e in self.powers.items():
                root = gmpy2.rootn(gmpy2.mpfr(p), e.denominator)
                acc *= root ** e.numerator
        with gmpy2.context(gmpy2.get_context(), precision=precision):
            return +acc

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ScaleFactor) and self.powers == other.powers

    def __hash__(self) -> int:
        return hash(tuple(self.powers.items()))

    def to_json(self) -> list[list[int]]:
        return [[p, e.numerator, e.denominator] for p, e in self.powers.items()]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[int]]) -> "ScaleFactor":
        return cls({p: Fraction(n, d) for p, n, d in data})

    def format(self, latex: bool = False) -> str:
        if not self.powers:
            return "1"
        q, rest = self.split()
        parts = []
        if q != 1:
            parts.append(str(q) if q.denominator == 1 else f"({q})")
        for p, e in rest.powers.items():
            parts.append(f"{p}^{{{e}}}" if latex else f"{p}^({e})")
        return (" \\cdot " if latex else "*").join(parts)

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"ScaleFactor({self.format()})"

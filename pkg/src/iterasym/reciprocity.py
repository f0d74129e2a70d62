"""From a divergent map ``f`` to the contracting reciprocal map ``g(y) = 1/f(1/y)``.

The reciprocal map is expanded as a Puiseux series at ``y = 0`` and then
brought into step form ``u + a1*u**(tau+1) + a2*u**(2*tau+1) + ...`` by the
root substitution ``u = y**(1/t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .exprdsl import Add, Div, Expr, Func, Mul, Neg, Num, Pow, Sub, Var, variables
from .seriescore.puiseux import INF, PuiseuxSeries, SeriesError

DEFAULT_DETECTION_ORDER = 10


class ReciprocityError(ValueError):
    pass


class MLFormError(ReciprocityError):
    """The reciprocal map is outside the supported step-map class."""


def expand(e: Expr, sub: PuiseuxSeries, cap) -> PuiseuxSeries:
    """Series of ``e`` with its variable replaced by ``sub``, truncated at ``cap``."""
    if isinstance(e, Num):
        return PuiseuxSeries.const(e.value, sub.var)
    if isinstance(e, Var):
        return sub
    if isinstance(e, Neg):
        return -expand(e.arg, sub, cap)
    if isinstance(e, Add):
        return (expand(e.left, sub, cap) + expand(e.right, sub, cap)).truncate(cap)
    if isinstance(e, Sub):
        return (expand(e.left, sub, cap) - expand(e.right, sub, cap)).truncate(cap)
    if isinstance(e, Mul):
        return expand(e.left, sub, cap).mul(expand(e.right, sub, cap), cap)
    if isinstance(e, Div):
        denominator = expand(e.right, sub, cap)
        if not denominator.coeffs:
            raise ReciprocityError("denominator vanishes to truncation order")
        return expand(e.left, sub, cap).mul(denominator.invert(cap), cap)
    if isinstance(e, Pow):
        return expand(e.base, sub, cap).pow_rational(e.exponent, cap)
    if isinstance(e, Func):
        arg = expand(e.arg, sub, cap)
        if e.name == "sqrt":
            return arg.pow_rational(Fraction(1, 2), cap)
        if e.name == "exp":
            return arg.exp(cap)
        return arg.log(cap)
    raise TypeError(f"not an expression node: {e!r}")


def derive_g_series(f: Expr, order=DEFAULT_DETECTION_ORDER) -> PuiseuxSeries:
    """Puiseux expansion of ``1/f(1/y)`` at ``y = 0`` valid below ``order``."""
    if variables(f) - {"x"}:
        raise ReciprocityError("the map must be written in the variable x")
    order = Fraction(order)
    inverse_y = PuiseuxSeries.monomial(-1)
    for slack in (2, 4, 8, 16, 32):
        try:
            big = expand(f, inverse_y, order + slack)
        except SeriesError as exc:
            raise ReciprocityError(f"cannot expand f(1/y) at y=0: {exc}") from exc
        if not big.coeffs:
            continue
        _, v, _ = big.unit_parts()
        if v != -1:
            raise ReciprocityError(
                f"not reciprocal-normalizable: f(1/y) ~ y^({v}), expected y^(-1) times a unit"
            )
        g = big.invert(order)
        if g.order >= order:
            return g.truncate(order)
    raise ReciprocityError(f"could not reach order {order} in the expansion of 1/f(1/y)")


@dataclass(frozen=True)
class MLForm:
    """Step-form data of a reciprocal map.

    ``u = y**(1/t)`` evolves by ``u -> u + sum_j a[j-1] * u**(j*tau + 1)``;
    ``lam = -1/(tau*a1)`` sets the leading decay ``u_k ~ (lam/k)**(1/tau)``.
    """

    t: int
    tau: int
    a: tuple[Fraction, ...]
    lam: Fraction
    u_map: PuiseuxSeries = field(compare=False)

    @property
    def a1(self) -> Fraction:
        return self.a[0]

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "tau": self.tau,
            "lambda": str(self.lam),
            "a": [str(c) for c in self.a],
        }


def to_ml_form(g: PuiseuxSeries) -> MLForm:
    if not g.coeffs:
        raise MLFormError("g vanishes to its truncation order")
    lead_e, lead_c = next(iter(g.coeffs.items()))
    if lead_e != 1:
        raise MLFormError(f"g starts with y^({lead_e}); expected y")
    if lead_c != 1:
        raise MLFormError(f"leading coefficient {lead_c} != 1")
    t = g.lattice
    body = g.substitute_power(t, var="u")
    u_map = body if t == 1 else body.pow_rational(Fraction(1, t))
    corrections = [e for e in u_map.coeffs if e != 1]
    if not corrections:
        raise MLFormError("no correction term within the truncation order; map is not contracting")
    first = corrections[0]
    if first.denominator != 1 or first <= 1:
        raise MLFormError(f"unexpected first correction exponent {first}")
    tau = int(first) - 1
    a1 = u_map[first]
    if a1 >= 0:
        raise MLFormError(f"a1 = {a1} >= 0: the reciprocal orbit does not decay to 0 like k^(-1/tau)")
    for e in corrections:
        if e.denominator != 1 or (int(e) - 1) % tau:
            raise MLFormError(f"support off step-lattice: u^({e}) with tau = {tau}")
    count = 0
    while (count + 1) * tau + 1 < u_map.order:
        count += 1
    a = tuple(u_map[j * tau + 1] for j in range(1, count + 1))
    lam = Fraction(-1) / (tau * a1)
    return MLForm(t=t, tau=tau, a=a, lam=lam, u_map=u_map)


def ml_form_for(f: Expr, n_coeffs: int) -> tuple[PuiseuxSeries, MLForm]:
    """Derive ``g`` to whatever order yields at least ``n_coeffs`` step coefficients."""
    order = Fraction(DEFAULT_DETECTION_ORDER)
    for _ in range(6):
        g = derive_g_series(f, order)
        ml = to_ml_form(g)
        if len(ml.a) >= n_coeffs:
            return g, ml
        need = Fraction((n_coeffs + 1) * ml.tau + 2, ml.t)
        order = max(order + 1, Fraction(math.ceil(need)))
    raise MLFormError(f"could not obtain {n_coeffs} step coefficients")


def reciprocal_of_series(g: PuiseuxSeries, cap=INF) -> PuiseuxSeries:
    """``1/g(1/x)`` expanded at ``x = infinity`` as a series in ``1/x`` (the involution)."""
    return g.invert(cap)

"""Undetermined-coefficient solution of ``u_{k+1} = g_u(u_k)`` in the scale
``k**(-1/tau) * ln(k)**l * k**(-m)``, and normalization of the free constant.

The ansatz is ``u_k = lam**(1/tau) * k**(-1/tau) * (1 + sum c[m, l] ln(k)**l k**(-m))``.
Coefficients of inner order ``m`` first show up in the residual at order
``m + 1``; there they enter linearly, so each order is one small exact linear
system.  At ``m = 1`` the ``l = 0`` coefficient drops out of every equation:
that is the one free parameter ``kappa`` of the orbit.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exprdsl import Expr
from .reciprocity import MLForm, ml_form_for
from .render import render_text
from .seriescore.asym import AsymSeries
from .seriescore.constpoly import ConstPoly
from .seriescore.scale import ScaleFactor

MAX_SOLVER_ORDER = 10


class SolverError(ValueError):
    pass


class InconsistentMatching(SolverError):
    pass


class ExtraDegeneracy(SolverError):
    pass


class OrderExhausted(SolverError):
    pass


class NormalizationError(SolverError):
    pass


def u_ansatz(ml: MLForm, terms: dict, order: int) -> AsymSeries:
    lead = ScaleFactor.from_rational(ml.lam, Fraction(1, ml.tau))
    return AsymSeries(terms, order, Fraction(-1, ml.tau), lead)


def apply_step_map(ml: MLForm, u: AsymSeries) -> AsymSeries:
    """``g_u(u) = u + sum_j a_j u**(j*tau + 1)`` truncated at ``u.order``."""
    order = u.order
    if len(ml.a) < order:
        raise OrderExhausted(
            f"step map known to {len(ml.a)} coefficients; order {order} needs {order}"
        )
    step = u.pow_int(ml.tau)
    total = u
    power = u
    for j in range(1, order + 1):
        power = power.mul(step)
        if ml.a[j - 1]:
            total = total + power * ml.a[j - 1]
    return total


def residual(ml: MLForm, u: AsymSeries, order: int | None = None) -> AsymSeries:
    """``shift(u) - g_u(u)`` through ``order`` (default ``u.order + 1``).

    Inner order ``m`` of ``u`` only influences residual orders ``>= m + 1``,
    so the residual through ``u.order + 1`` is fully determined by ``u``.
    """
    order = u.order + 1 if order is None else order
    if order > u.order + 1:
        raise SolverError(f"residual through {order} is not determined by a series of order {u.order}")
    uu = u.with_order(order)
    return (uu.shift() - apply_step_map(ml, uu)).truncate(order)


def _solve_linear(rows: list[list[Fraction]], rhs: list[ConstPoly], n: int) -> list[ConstPoly]:
    """Exact Gaussian elimination with ConstPoly right-hand sides."""
    A = [list(r) for r in rows]
    b = list(rhs)
    pivots = []
    r = 0
    for col in range(n):
        pivot = next((i for i in range(r, len(A)) if A[i][col] != 0), None)
        if pivot is None:
            raise ExtraDegeneracy(f"coefficient {col} is not determined by the matching equations")
        A[r], A[pivot] = A[pivot], A[r]
        b[r], b[pivot] = b[pivot], b[r]
        for i in range(len(A)):
            if i != r and A[i][col] != 0:
                factor = A[i][col] / A[r][col]
                A[i] = [x - factor * y for x, y in zip(A[i], A[r])]
                b[i] = b[i] - b[r] * factor
        pivots.append(r)
        r += 1
    for i in range(r, len(A)):
        if not b[i].is_zero():
            raise InconsistentMatching("matching equations have no solution in the log-power ansatz")
    return [b[p] / A[p][c] for c, p in enumerate(pivots)]


def solve_u_series(ml: MLForm, M: int) -> AsymSeries:
    """Solve for ``u_k`` through inner order ``M``; coefficients are polynomials in kappa."""
    if not 1 <= M <= MAX_SOLVER_ORDER:
        raise SolverError(f"order M={M} outside [1, {MAX_SOLVER_ORDER}]")
    if len(ml.a) < M + 1:
        raise OrderExhausted(f"order {M} needs {M + 1} step coefficients, have {len(ml.a)}")
    kappa = ConstPoly.symbol()
    terms: dict[tuple[int, int], ConstPoly] = {(0, 0): ConstPoly.const(1)}
    for m in range(1, M + 1):
        if m == 1:
            terms[(1, 0)] = kappa
            unknowns = [(1, 1)]
        else:
            unknowns = [(m, l) for l in range(m, -1, -1)]
        base = residual(ml, u_ansatz(ml, terms, m), m + 1)
        for (mm, l), c in base.terms.items():
            if mm < m + 1:
                raise InconsistentMatching(f"residual term ({mm}, {l}) survived a solved order")
        eq_keys = [(m + 1, l) for l in range(m + 2)]
        extra = [key for key in base.terms if key not in eq_keys]
        if extra:
            raise InconsistentMatching(f"residual has terms outside the ansatz: {extra}")
        columns = []
        for key in unknowns:
            probe = dict(terms)
            probe[key] = ConstPoly.const(1)
            diff = residual(ml, u_ansatz(ml, probe, m), m + 1) - base
            column = []
            for eq in eq_keys:
                c = diff[eq]
                if not c.is_const():
                    raise SolverError("matching equation is not linear in the unknowns")
                column.append(c.constant_term())
            columns.append(column)
        if m == 1:
            probe = dict(terms)
            probe[(1, 0)] = kappa + 1
            drift = residual(ml, u_ansatz(ml, probe, 1), 2) - base
            if not drift.is_zero():
                raise SolverError("the k^-1 coefficient is not free; no one-parameter family")
        rows = [[columns[j][i] for j in range(len(unknowns))] for i in range(len(eq_keys))]
        rhs = [-base[eq] for eq in eq_keys]
        solution = _solve_linear(rows, rhs, len(unknowns))
        for key, value in zip(unknowns, solution):
            terms[key] = value
    u = u_ansatz(ml, terms, M)
    check = residual(ml, u)
    if not check.is_zero():
        raise InconsistentMatching("final residual does not vanish")
    return u


def derive_xy_series(u: AsymSeries, t: int) -> tuple[AsymSeries, AsymSeries]:
    y = u.pow_int(t)
    return y, y.reciprocal()


@dataclass
class NormalizedExpansion:
    ml: MLForm
    u_series: AsymSeries
    y_series: AsymSeries
    x_series: AsymSeries
    report_scale: ScaleFactor
    rho: Fraction
    c_slot: tuple[int, Fraction]
    b1: Fraction
    kappa_affine: tuple[Fraction, Fraction]
    definition: str

    @property
    def scaled_x(self) -> AsymSeries:
        """``s * x_k`` with the rational prefactor folded into the coefficients."""
        return _fold(self.x_series * self.report_scale)

    def to_json(self) -> dict:
        return {
            "ml_form": self.ml.to_json(),
            "report_scale": self.report_scale.to_json(),
            "rho": str(self.rho),
            "c_slot": {"m": self.c_slot[0], "k_exponent": str(self.c_slot[1])},
            "b1": str(self.b1),
            "definition": self.definition,
            "u_series": self.u_series.to_json(),
            "y_series": self.y_series.to_json(),
            "x_series": self.x_series.to_json(),
        }


def _fold(series: AsymSeries) -> AsymSeries:
    if not series.scale.is_rational():
        return series
    q = series.scale.to_rational()
    return AsymSeries({k: c * q for k, c in series.terms.items()}, series.order, series.r0)


def _mono(coeff: ConstPoly, l: int, e: Fraction) -> str:
    parts = []
    if l:
        parts.append("ln(k)" if l == 1 else f"ln(k)^{l}")
    if e:
        parts.append("k" if e == 1 else f"k^({e})")
    return "*".join([f"({coeff})"] + parts)


def normalize_constant(u: AsymSeries, ml: MLForm, s: ScaleFactor | None = None) -> NormalizedExpansion:
    """Rename the free parameter so that it is the first log-free slot of ``s * x_k``."""
    s = s or ScaleFactor.one()
    y, x = derive_xy_series(u, ml.t)
    ratio = s * x.scale
    if not ratio.is_rational():
        raise NormalizationError(f"irrational report scale ratio {ratio}; use numeric-only mode")
    rho = ratio.to_rational()
    xs = _fold(x * s)
    slot = None
    for (m, l), c in xs.terms.items():
        if c.degree >= 1:
            if l > 0:
                raise NormalizationError(f"kappa first appears with log power {l} at inner order {m}")
            slot = m
            break
    if slot is None:
        raise NormalizationError("the free parameter does not reach the x-series within its order")
    coeff = xs[(slot, 0)]
    if coeff.degree != 1:
        raise NormalizationError("free-constant slot is not affine in kappa")
    a, b = coeff[1], coeff[0]
    inner = ConstPoly((-b / a, 1 / a))
    u_c = u.map_coeffs(lambda p: p.compose(inner))
    y_c, x_c = derive_xy_series(u_c, ml.t)
    leading = [(key, c.compose(inner)) for key, c in xs.terms.items() if key[0] < slot or (key[0] == slot and key[1] > 0)]
    e = xs.r0 - slot
    lhs = "x_k" if s == ScaleFactor.one() else f"{s}*x_k"
    inner_text = lhs + "".join(f" - {_mono(c, l, xs.r0 - m)}" for (m, l), c in leading)
    prefix = "" if e == 0 else f"k^({-e}) * "
    definition = f"lim_(k->oo) {prefix}({inner_text}) = C"
    b1 = x[(1, 1)].constant_term() / x[(0, 0)].constant_term() if x[(0, 0)] else Fraction(0)
    return NormalizedExpansion(
        ml=ml,
        u_series=u_c,
        y_series=y_c,
        x_series=x_c,
        report_scale=s,
        rho=rho,
        c_slot=(slot, e),
        b1=b1,
        kappa_affine=(a, b),
        definition=definition,
    )


def expand_map(f: Expr, M: int = 6, s: ScaleFactor | None = None) -> NormalizedExpansion:
    """Parse-free convenience: ``f`` -> reciprocal map -> solved, normalized expansion."""
    _, ml = ml_form_for(f, M + 1)
    u = solve_u_series(ml, M)
    return normalize_constant(u, ml, s)


__all__ = [
    "NormalizedExpansion", "SolverError", "InconsistentMatching", "ExtraDegeneracy",
    "OrderExhausted", "NormalizationError", "solve_u_series", "derive_xy_series",
    "normalize_constant", "residual", "expand_map", "render_text",
]

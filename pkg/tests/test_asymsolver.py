from fractions import Fraction as F
from math import comb

import pytest

from conftest import expansion, reference_book
from iterasym.asymsolver import (NormalizationError, derive_xy_series, expand_map, normalize_constant,
                                 residual, solve_u_series)
from iterasym.exprdsl import parse
from iterasym.reciprocity import ml_form_for
from iterasym.seriescore import AsymSeries, ConstPoly, ScaleFactor

CASES = [c.name for c in reference_book().cases]


@pytest.mark.parametrize("case", CASES)
def test_residual_vanishes_and_y_times_x_is_one(case):
    e = expansion(case)
    assert residual(e.ml, e.u_series).is_zero()
    one = e.y_series.mul(e.x_series)
    assert one.r0 == 0 and one.terms == {(0, 0): ConstPoly.const(1)}
    assert one.scale == ScaleFactor.one()


def _coeff(series: AsymSeries, m: int, l: int) -> ConstPoly:
    return series[(m, l)] * series.scale.to_rational()


@pytest.mark.parametrize("p", [F(1, 3), F(1, 2), F(2, 3), F(2), F(3, 4), F(3, 2)])
def test_parametric_coefficient_law(p):
    e = expand_map(parse(f"x^(1-({p}))*(1+x)^({p})"), 3)
    x = e.x_series
    assert x.r0 == 1
    C = ConstPoly.symbol()
    assert _coeff(x, 0, 0) == ConstPoly.const(p)
    assert _coeff(x, 1, 1) == ConstPoly.const(F(-1, 2) + p / 2)
    assert _coeff(x, 1, 0) == C
    assert _coeff(x, 2, 1) == ConstPoly.const(1 / (4 * p) - F(1, 2) + p / 4)
    delta = ConstPoly.const(-1 / (12 * p) + F(1, 4) - p / 6) + C * (F(1, 2) - 1 / (2 * p))
    assert _coeff(x, 2, 0) == delta


# P_2..P_6 for p = 1/2 as printed, as coefficient lists in Y (constant first)
PRINTED_P = {
    2: [0, F(-1, 2), 1],
    3: [F(1, 48), F(1, 4), F(-5, 4), 1],
    4: [F(-7, 288), F(-1, 24), F(9, 8), F(-13, 6), 1],
    5: [F(47, 2880), F(-29, 288), F(-2, 3), F(71, 24), F(-77, 24), 1],
    6: [F(-139, 57600), F(427, 2880), F(1, 32), F(-45, 16), F(145, 24), F(-87, 20), 1],
}


def _assemble_from_P(M: int = 6) -> AsymSeries:
    """(2/k) * (1 + sum P_m(Y) k^-m), with Y = (1/2) ln k - 2C and P_1 = Y."""
    P = dict(PRINTED_P)
    P[1] = [0, 1]
    terms: dict = {(0, 0): ConstPoly.const(1)}
    minus_2C = ConstPoly([0, -2])
    for m in range(1, M + 1):
        for j, pj in enumerate(P[m]):
            # Y^j = sum_i binom(j, i) (ln k / 2)^i (-2C)^(j - i)
            for i in range(j + 1):
                c = minus_2C ** (j - i) * (pj * comb(j, i) * F(1, 2 ** i))
                terms[(m, i)] = terms.get((m, i), ConstPoly()) + c
    return AsymSeries(terms, M, r0=-1, scale=ScaleFactor.from_rational(2))


def test_printed_polynomials_reproduce_y_series():
    y = expansion("p_half").y_series
    assert y.order == 6
    assert _assemble_from_P(6) == y


def test_truncation_uniqueness():
    _, ml8 = ml_form_for(parse("sqrt(x+x^2)"), 9)
    _, ml5 = ml_form_for(parse("sqrt(x+x^2)"), 5)
    assert solve_u_series(ml8, 8).truncate(4) == solve_u_series(ml5, 4)


def test_p_half_normalization():
    e = expansion("p_half")
    assert e.rho == F(1, 2) and e.c_slot == (1, 0)
    assert e.definition == "lim_(k->oo) (x_k - (1/2)*k - (-1/4)*ln(k)) = C"
    assert e.b1 == F(-1, 2)


def test_root_scaled_cases_have_rational_ratio():
    assert expansion("q_two").rho == 2
    assert expansion("q_four_thirds").rho == F(4, 3)
    assert expansion("q_three").rho == 3


def test_irrational_report_ratio_is_rejected():
    _, ml = ml_form_for(parse("x+1/x"), 5)
    u = solve_u_series(ml, 4)
    with pytest.raises(NormalizationError, match="irrational"):
        normalize_constant(u, ml)


def test_add_one_is_exact():
    x = expansion("add_one").x_series
    assert x.r0 == 1
    assert x.terms == {(0, 0): ConstPoly.const(1), (1, 0): ConstPoly.symbol()}


def test_y_is_reciprocal_of_x_power():
    e = expansion("x_exp_sqrt_inv")
    y, x = derive_xy_series(e.u_series, e.ml.t)
    assert y == e.y_series and x == e.x_series

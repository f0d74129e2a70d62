import json
from fractions import Fraction as F

import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

from iterasym.seriescore import (AsymSeries, ConstPoly, LatticeError, PuiseuxSeries, ScaleFactor,
                                 SeriesError)
from iterasym.seriescore.puiseux import p_exp, p_invert_unit, p_log1p, p_mul, p_pow_rational

N = 8


def ps(coeffs, order=N, var="y"):
    return PuiseuxSeries({F(e): F(c) for e, c in coeffs.items()}, order, var)


def binom(r, n):
    out = F(1)
    for i in range(n):
        out *= (r - i) / F(i + 1)
    return out


# -- ConstPoly ----------------------------------------------------------------

def test_constpoly_trims_and_evaluates():
    p = ConstPoly([1, 2, 0, 0])
    assert p.degree == 1
    assert ConstPoly().degree == -1
    assert p(F(1, 2)) == 2
    assert (p * p).coeffs == (1, 4, 4)
    assert p.compose(ConstPoly([F(-1, 2), F(1, 2)])) == ConstPoly([0, 1])


def test_constpoly_json_round_trip():
    p = ConstPoly([F(-1, 24), 1, 10, 16])
    assert ConstPoly.from_json(json.loads(json.dumps(p.to_json()))) == p


# -- ScaleFactor --------------------------------------------------------------

def test_scale_factor_is_prime_factored():
    s = ScaleFactor.from_rational(F(4, 3), F(1, 4))
    assert s.powers == {2: F(1, 2), 3: F(-1, 4)}
    assert (s ** 4).to_rational() == F(4, 3)
    assert not s.is_rational()
    q, rest = ScaleFactor.from_rational(8, F(1, 2)).split()
    assert q == 2 and rest.powers == {2: F(1, 2)}


def test_scale_value():
    v = ScaleFactor.from_rational(2, F(1, 2)).value(128)
    assert format(v, ".20f") == "1.41421356237309504880"


# -- Puiseux ------------------------------------------------------------------

def test_invert_unit_geometric():
    inv = p_invert_unit(ps({0: 1, 1: 1}))
    assert [inv[F(j)] for j in range(N)] == [(-1) ** j for j in range(N)]
    one = p_mul(ps({0: 1, 1: 1}, order=float("inf")), inv)
    assert one.coeffs == {F(0): 1} and one.order == N


def test_invert_non_unit_rejected():
    with pytest.raises(SeriesError):
        p_invert_unit(ps({1: 1}))


def test_reciprocal_p_half_coefficients():
    g = p_mul(ps({1: 1}, order=float("inf")), p_pow_rational(ps({0: 1, 1: 1}), F(-1, 2)))
    assert [g[F(j)] for j in range(1, 5)] == [1, F(-1, 2), F(3, 8), F(-5, 16)]


def test_sqrt_binomial():
    s = p_pow_rational(ps({0: 1, 1: 1}), F(1, 2))
    assert [s[F(j)] for j in range(4)] == [1, F(1, 2), F(-1, 8), F(1, 16)]
    assert p_pow_rational(ps({0: 1, 1: 1}), 0).coeffs == {F(0): 1}


def test_inverse_sqrt_of_one_plus_cube_squared_is_reciprocal():
    base = ps({0: 1, 3: 1}, order=12, var="u")
    s = p_pow_rational(base, F(-1, 2))
    assert s[F(0)] == 1 and s[F(3)] == F(-1, 2) and s[F(6)] == F(3, 8)
    # oracle: the square must be 1/(1+u^3), the geometric series in u^3
    sq = p_mul(s, s)
    assert all(sq[F(3 * j)] == (-1) ** j for j in range(4))
    assert set(sq.coeffs) <= {F(3 * j) for j in range(4)}


def test_exp_and_log1p():
    e = p_exp(ps({1: F(-1, 2)}, var="u"))
    assert [e[F(j)] for j in range(4)] == [1, F(-1, 2), F(1, 8), F(-1, 48)]
    l = p_log1p(ps({2: 1}))
    assert [l[F(j)] for j in (2, 4, 6)] == [1, F(-1, 2), F(1, 3)]
    assert l[F(3)] == 0
    assert p_exp(p_log1p(ps({1: 1}))).coeffs == {F(0): 1, F(1): 1}


def test_exp_needs_positive_valuation():
    with pytest.raises(SeriesError):
        p_exp(ps({0: 1, 1: 1}))


def test_lattice_refinement_and_cap():
    s = ps({F(1, 2): 1}) + ps({F(1, 3): 1})
    assert s.lattice == 6
    with pytest.raises(LatticeError):
        ps({F(1, 13): 1}) + ps({0: 1})


def test_truncation_order_is_weakest():
    a = ps({0: 1, 1: 1}, order=5)
    b = ps({0: 1, 2: 1}, order=3)
    assert (a + b).order == 3
    assert p_mul(a, b).order == 3


# -- Puiseux properties ------------------------------------------------------

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=5)


@st.composite
def unit_series(draw, lattice=2, order=4):
    exps = [F(i, lattice) for i in range(1, lattice * order)]
    coeffs = {e: draw(rationals) for e in exps}
    coeffs[F(0)] = F(1)
    return PuiseuxSeries(coeffs, order)


@st.composite
def series(draw, order=4):
    exps = [F(i, 2) for i in range(0, 2 * order)]
    return PuiseuxSeries({e: draw(rationals) for e in exps}, order)


@given(series(), series(), series())
@settings(max_examples=60, deadline=None)
def test_ring_laws(a, b, c):
    assert p_mul(p_mul(a, b), c) == p_mul(a, p_mul(b, c))
    assert p_mul(a, b + c) == p_mul(a, b) + p_mul(a, c)
    assert p_mul(a, b) == p_mul(b, a)
    assert (a + b) + c == a + (b + c)


@given(unit_series(), rationals, rationals)
@settings(max_examples=40, deadline=None)
def test_pow_additive(s, a, b):
    lhs = p_mul(p_pow_rational(s, a), p_pow_rational(s, b))
    rhs = p_pow_rational(s, a + b)
    assert min(lhs.order, rhs.order) >= s.order
    assert lhs.agrees_with(rhs)


@given(unit_series())
@settings(max_examples=40, deadline=None)
def test_invert_is_inverse(s):
    assert p_mul(s, p_invert_unit(s)) == PuiseuxSeries.const(1).truncate(s.order)


# -- AsymSeries ---------------------------------------------------------------

def one_over_k_plus(c, M):
    """1/(k + c) = k^-1 * sum (-c)^m k^-m."""
    return AsymSeries({(m, 0): F(-c) ** m for m in range(M + 1)}, M, r0=-1)


def test_reciprocal_of_one_over_k_plus_one():
    x = one_over_k_plus(1, 6).reciprocal()
    assert x.r0 == 1
    assert x.terms == {(0, 0): ConstPoly.const(1), (1, 0): ConstPoly.const(1)}


def test_shift_of_inverse_k():
    s = AsymSeries({(0, 0): 1}, 5, r0=-1).shift()
    assert s.terms == {(m, 0): ConstPoly.const((-1) ** m) for m in range(6)}


def test_shift_of_log():
    # ln(k) stored as k * (ln(k) k^-1); shifted: k * (ln(k)/k + sum (-1)^(j+1) / (j k^(j+1)))
    ln_k = AsymSeries({(1, 1): 1}, 5, r0=1)
    s = ln_k.shift()
    expected = {(1, 1): 1}
    for j in range(1, 5):
        expected[(j + 1, 0)] = F((-1) ** (j + 1), j)
    assert s.terms == {k: ConstPoly.const(v) for k, v in expected.items()}


def test_shift_of_log_over_k_is_product():
    M = 5
    inv_k = AsymSeries({(0, 0): 1}, M, r0=-1)
    ln_k = AsymSeries({(1, 1): 1}, M, r0=1)
    product = ln_k.mul(inv_k)
    assert product.shift() == ln_k.shift().mul(inv_k.shift())


def test_evaluate_examples():
    two_sqrt_k = AsymSeries({(0, 0): 2}, 3, r0=F(1, 2))
    assert two_sqrt_k.evaluate(4, precision=64) == 4
    s = AsymSeries({(0, 0): 1, (1, 0): -1}, 3, r0=-1)
    v = s.evaluate(10, precision=128)
    assert abs(v - gmpy2.mpfr("0.09", 128)) < gmpy2.mpfr(2) ** -120


def test_evaluate_needs_C():
    s = AsymSeries({(0, 0): 1, (1, 0): ConstPoly.symbol()}, 2)
    with pytest.raises(ValueError):
        s.evaluate(10)


@pytest.mark.parametrize("M", [2, 4, 6])
@pytest.mark.parametrize("k", [100, 1000, 12345])
def test_truncation_error_within_first_dropped_term(M, k):
    s = one_over_k_plus(1, M)
    with gmpy2.context(gmpy2.get_context(), precision=256):
        exact = 1 / gmpy2.mpfr(k + 1)
        dropped = gmpy2.mpfr(k) ** -(M + 2)
        assert abs(s.evaluate(k, precision=256) - exact) <= 2 * dropped


def test_log_power_bound_enforced():
    with pytest.raises(ValueError):
        AsymSeries({(1, 2): 1}, 3)


def test_asym_json_shape_round_trip():
    s = AsymSeries({(0, 0): 1, (1, 1): F(1, 2), (1, 0): ConstPoly([0, -4])}, 3, r0=F(-1, 2),
                   scale=ScaleFactor.from_rational(2, F(-1, 2)))
    data = json.loads(json.dumps(s.to_json()))
    assert data["scale"] == [[2, -1, 2]]
    assert {"m", "l", "poly"} <= set(data["terms"][0])
    assert AsymSeries.from_json(data) == s


@st.composite
def asym_series(draw, M=4):
    terms = {(0, 0): F(1)}
    for m in range(1, M + 1):
        for l in range(m + 1):
            terms[(m, l)] = ConstPoly([draw(rationals), draw(rationals)])
    return AsymSeries(terms, M, r0=draw(st.sampled_from([F(-1), F(-1, 2), F(1, 3)])))


@given(asym_series(), asym_series())
@settings(max_examples=25, deadline=None)
def test_shift_is_multiplicative(a, b):
    assert a.mul(b).shift() == a.shift().mul(b.shift())


@given(asym_series())
@settings(max_examples=25, deadline=None)
def test_reciprocal_is_inverse(a):
    one = a.mul(a.reciprocal())
    assert one.r0 == 0 and one.terms == {(0, 0): ConstPoly.const(1)}


@given(asym_series(M=3), asym_series(M=3), asym_series(M=3))
@settings(max_examples=20, deadline=None)
def test_asym_ring_laws(a, b, c):
    assert a.mul(b).mul(c) == a.mul(b.mul(c))
    b2 = AsymSeries(b.terms, b.order, a.r0)
    c2 = AsymSeries(c.terms, c.order, a.r0)
    assert a.mul(b2 + c2) == a.mul(b2) + a.mul(c2)

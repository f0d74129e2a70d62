from fractions import Fraction as F

import pytest

from conftest import reference_book
from iterasym.exprdsl import parse
from iterasym.reciprocity import (MLFormError, ReciprocityError, derive_g_series, expand, ml_form_for,
                                  reciprocal_of_series, to_ml_form)
from iterasym.seriescore import PuiseuxSeries


def test_add_one():
    g = derive_g_series(parse("x+1"), 8)
    assert g.coeffs == {F(j): F((-1) ** (j + 1)) for j in range(1, 8)}


def test_p_half_matches_step_coefficients():
    g = derive_g_series(parse("sqrt(x+x^2)"), 9)
    assert [g[F(j)] for j in range(1, 9)] == [1, F(-1, 2), F(3, 8), F(-5, 16), F(35, 128),
                                              F(-63, 256), F(231, 1024), F(-429, 2048)]


def test_add_sqrt_one_plus_inverse_matches_closed_form():
    g = derive_g_series(parse("x + sqrt(1+1/x)"), 10)
    # independent route: expand the printed closed form y/(1+y*sqrt(1+y)) directly
    closed = expand(parse("y/(1+y*sqrt(1+y))", "y"), PuiseuxSeries.monomial(1), 10)
    assert g.agrees_with(closed)
    # y - y^2 + (1 - 1/2) y^3: the y^3 slot collects y^3 and -y^2 * (y/2)
    assert [g[F(j)] for j in (1, 2, 3)] == [1, -1, F(1, 2)]


def test_bounded_map_is_rejected():
    with pytest.raises(ReciprocityError, match="not reciprocal-normalizable"):
        derive_g_series(parse("sqrt(x)"), 6)
    with pytest.raises(ReciprocityError, match="not reciprocal-normalizable"):
        derive_g_series(parse("x^2"), 6)


def test_log_of_nonunit_is_rejected():
    with pytest.raises(ReciprocityError):
        derive_g_series(parse("x*ln(x)"), 6)


def test_ml_form_p_half():
    _, ml = ml_form_for(parse("sqrt(x+x^2)"), 7)
    assert (ml.t, ml.tau, ml.lam) == (1, 1, 2)
    assert ml.a[:7] == (F(-1, 2), F(3, 8), F(-5, 16), F(35, 128), F(-63, 256), F(231, 1024),
                        F(-429, 2048))


def test_ml_form_root_substitution():
    _, ml = ml_form_for(parse("x*exp(sqrt(1/x))"), 6)
    assert (ml.t, ml.tau, ml.a1, ml.lam) == (2, 1, F(-1, 2), 2)
    # oracle: u*exp(-u/2) expanded on its own
    direct = expand(parse("y*exp(-y/2)", "y"), PuiseuxSeries.monomial(1), 7)
    assert all(ml.u_map[e] == direct[e] for e in direct.coeffs if e < 7)
    assert ml.a[:4] == tuple(direct[F(j + 1)] for j in range(1, 5))


def test_ml_form_q_two():
    _, ml = ml_form_for(parse("x+1/x"), 4)
    assert (ml.t, ml.tau, ml.lam) == (1, 2, F(1, 2))
    assert ml.a[:4] == (-1, 1, -1, 1)


def test_ml_form_errors():
    with pytest.raises(MLFormError, match="a1"):
        to_ml_form(derive_g_series(parse("x - 1/x"), 8))
    with pytest.raises(MLFormError, match="leading coefficient"):
        to_ml_form(derive_g_series(parse("2*x+1"), 8))
    with pytest.raises(MLFormError, match="step-lattice"):
        to_ml_form(PuiseuxSeries({F(1): 1, F(2): -1, F(5, 2): 1}, 6))


@pytest.mark.parametrize("case", [c.name for c in reference_book().cases])
def test_runbook_map_invariants(case):
    cfg = next(c for c in reference_book().cases if c.name == case)
    f = parse(cfg.f_text, "x")
    g, ml = ml_form_for(f, 10)
    assert ml.lam * ml.tau * ml.a1 == -1
    # step support {1, tau+1, 2tau+1, ...} through order 10*tau
    for e in ml.u_map.coeffs:
        if e < 10 * ml.tau:
            assert e.denominator == 1 and (e - 1) % ml.tau == 0
    # involution: 1/g(1/x) reproduces the expansion of f at infinity, written in y = 1/x
    f_series = expand(f, PuiseuxSeries.monomial(-1), g.order - 2)
    back = reciprocal_of_series(g, g.order - 2)
    assert back.agrees_with(f_series)

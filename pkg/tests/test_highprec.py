import json
import math
import time
from dataclasses import replace
from fractions import Fraction as F

import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

from conftest import expansion, full_run, reference_book
from iterasym.exprdsl import parse
from iterasym.highprec import (ConstantReport, OrbitError, PrecisionBudgetError, decimal_digits,
                               digits_between, iterate_map, newton_constant,
                               product_r, product_r_tail_bound, convergence_exponent,
                               rounding_floor)
from iterasym.runbook import matching_places, run_case

P_HALF_C = "1.1751774424585571398132856"


def mp(text, precision=256):
    with gmpy2.context(gmpy2.get_context(), precision=precision):
        return gmpy2.mpfr(text)


def test_one_step_of_p_half():
    s = iterate_map(parse("sqrt(x+x^2)"), 1, K=1, precision=128, rerun=False)
    with gmpy2.context(gmpy2.get_context(), precision=128):
        assert s.y_K == 1 / gmpy2.sqrt(gmpy2.mpfr(2))


def test_y_form_orbit_closed_form():
    s = iterate_map(parse("y/(1+y)", "y"), 1, K=9, precision=128)
    assert abs(s.y_K - mp("0.1", 128)) < mp(2) ** -120
    assert s.agreement_bits > 120


def test_budget_is_checked():
    with pytest.raises(PrecisionBudgetError):
        iterate_map(parse("x+1"), 1, K=10**6, precision=96)
    with pytest.raises(PrecisionBudgetError):
        iterate_map(parse("x+1"), 1, K=10, precision=32)


def test_non_decreasing_orbit_is_rejected():
    with pytest.raises(OrbitError, match="decreasing"):
        iterate_map(parse("y", "y"), F(1, 2), K=3, precision=128)
    with pytest.raises(OrbitError):
        iterate_map(parse("x+1"), 0, K=3, precision=128)


def test_newton_recovers_p_half_constant():
    exp = expansion("p_half")
    sample = iterate_map(parse("sqrt(x+x^2)"), 1, K=10**5, precision=192, rerun=False)
    C, iters = newton_constant(exp.y_series, 10**5, sample.y_K, 192)
    assert iters <= 10
    assert abs(C - mp(P_HALF_C)) < mp("1e-24")


def test_newton_on_exact_series_returns_exact_constant():
    # x_k = k + C exactly; the orbit of x+1 from x0 = 1 has C = 1
    exp = expansion("add_one")
    C, _ = newton_constant(exp.x_series, 1000, mp(1001, 128), 128)
    assert C == 1
    # the y-side series is 1/(k+C) cut after k^-7, so there C is off by about K^-6
    with gmpy2.context(gmpy2.get_context(), precision=128):
        target = 1 / gmpy2.mpfr(1001)
    C_y, _ = newton_constant(exp.y_series, 1000, target, 128)
    assert mp("1e-19") < abs(C_y - 1) < mp("1e-17")


def test_digits_between_handles_carries():
    assert digits_between(mp("0.1999"), mp("0.2001"), 256) == 3
    assert digits_between(mp("0.99999999"), mp(1), 256) == 7
    assert digits_between(mp("1.25"), mp("1.35"), 256) == 0
    assert digits_between(mp("2.5"), mp("2.5"), 64) == decimal_digits(64)


@given(st.integers(1, 40), st.integers(64, 320))
@settings(max_examples=50, deadline=None)
def test_digits_between_never_exceeds_difference(e, precision):
    with gmpy2.context(gmpy2.get_context(), precision=precision + 32):
        a = gmpy2.const_pi()
        b = a + gmpy2.mpfr(10) ** -e
        d = digits_between(a, b, precision)
    assert d <= decimal_digits(precision)
    assert d <= e


@pytest.fixture(scope="module")
def p_half_result():
    cfg = next(c for c in reference_book().cases if c.name == "p_half")
    return run_case(replace(cfg, K=10**5, precision=192))


def test_report_invariants(p_half_result):
    r = p_half_result.report
    assert r.digits_agreed <= math.floor(r.precision * math.log10(2))
    assert abs(r.C_estimate - mp(P_HALF_C)) < mp(10) ** -r.digits_agreed
    d = r.diagnostics
    assert d["K_shift"] == 2 * r.K


def test_report_json_round_trip(p_half_result):
    r = p_half_result.report
    data = json.loads(json.dumps(r.to_json()))
    back = ConstantReport.from_json(data)
    assert back.C_estimate == r.C_estimate
    assert back.to_json() == data


def test_derived_outputs_follow_C():
    cfg = next(c for c in reference_book().cases if c.name == "q_two")
    r = run_case(replace(cfg, K=10**4, precision=128), check_K_shift=False).report
    (out,) = r.derived_outputs
    with gmpy2.context(gmpy2.get_context(), precision=128):
        assert out.value == 2 * (r.C_estimate - 1)


CASES = [c.name for c in reference_book().cases]


@pytest.mark.slow
@pytest.mark.parametrize("case", CASES)
def test_precision_and_K_stability(case):
    r = full_run().case(case).report
    bound = mp(10) ** -r.digits_agreed
    assert abs(r.C_estimate - mp(r.diagnostics["C_precision_shift"])) < bound
    assert abs(r.C_estimate - mp(r.diagnostics["C_K_shift"])) < bound


@pytest.mark.slow
@pytest.mark.parametrize("case", CASES)
def test_K_convergence_rate(case):
    """|C(K) - C(2K)| falls at least like K^-(M-1) over K = 10^4, 10^5, 10^6."""
    res = full_run().case(case)
    assert [K for K, _ in res.ladder] == [10**4, 10**5, 10**6]
    assert convergence_exponent(res.ladder, rounding_floor(res.report.precision)) >= res.report.M - 1


def test_convergence_exponent_fit():
    ladder = [(10**j, mp(10) ** (3 - 5 * j)) for j in (4, 5, 6)]
    assert convergence_exponent(ladder) == pytest.approx(5)
    # an exact series leaves only rounding noise, which sits under the floor
    noise = [(10**j, mp(10) ** (-72 + j)) for j in (4, 5, 6)]
    assert convergence_exponent(noise, rounding_floor(256)) == math.inf


def test_product_r_small_cases():
    with gmpy2.context(gmpy2.get_context(), precision=128):
        assert abs(product_r(terms=1) - gmpy2.sqrt(gmpy2.mpfr(2))) < gmpy2.mpfr(2) ** -120
        two = gmpy2.sqrt(gmpy2.mpfr(2)) * gmpy2.root(gmpy2.mpfr(5) / 4, 4)
        assert abs(product_r(terms=2) - two) < gmpy2.mpfr(2) ** -120


def test_product_r_value_and_speed():
    start = time.perf_counter()
    r = product_r(terms=80, precision=128)
    assert time.perf_counter() - start < 1
    # the printed figure is truncated; the next digit is a 5
    assert matching_places(r, "1.54170091336287603176") == 20
    assert product_r_tail_bound(80) < 1e-24

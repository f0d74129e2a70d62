"""High-precision orbits, Newton extraction of the free constant, and the
infinite product over the add-the-reciprocal orbit.

All arithmetic is MPFR (through gmpy2).  Orbits are iterated in y-space,
where values decrease monotonically from ``y0`` towards 0, so the rounding
budget does not depend on the magnitude of ``x_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2

from .asymsolver import NormalizedExpansion
from .exprdsl import Expr, compile_expr, parse, variables
from .seriescore.asym import AsymSeries

RERUN_EXTRA_BITS = 64
# correctly rounded ops per step, with slack for the shallow map trees used here
ULP_PER_STEP = 8
NEWTON_MAX_ITER = 50
DIGIT_GUARD = 2


class OrbitError(ArithmeticError):
    pass


class PrecisionBudgetError(OrbitError):
    pass


class NewtonError(ArithmeticError):
    pass


def decimal_digits(bits: int) -> int:
    return int(math.floor(bits * math.log10(2)))


def step_function(g: Expr) -> Callable:
    """Map ``y -> y_next`` from an expression in ``x`` (f) or in ``y`` (g)."""
    names = variables(g)
    fn = compile_expr(g)
    if names == {"x"}:
        return lambda y: 1 / fn(1 / y)
    if names <= {"y"}:
        return fn
    raise OrbitError(f"map must be in x or y, got variables {sorted(names)}")


def _check_budget(K: int, precision: int) -> None:
    if precision < 64:
        raise PrecisionBudgetError("precision must be at least 64 bits")
    if K >= 10**5 and precision < 128:
        raise PrecisionBudgetError(f"K={K} needs at least 128 bits")
    if math.log2(ULP_PER_STEP * max(K, 1)) > precision - 64:
        raise PrecisionBudgetError(f"rounding budget for K={K} exceeds {precision}-bit precision")


def _orbit(step: Callable, y0, checkpoints: Sequence[int], precision: int) -> dict[int, "gmpy2.mpfr"]:
    out = {}
    targets = sorted(set(checkpoints))
    with gmpy2.context(gmpy2.get_context(), precision=precision):
        y = gmpy2.mpfr(gmpy2.mpq(y0.numerator, y0.denominator))
        if 0 in targets:
            out[0] = y
        k = 0
        for target in targets:
            while k < target:
                nxt = step(y)
                if not nxt < y or nxt <= 0:
                    raise OrbitError(f"orbit not strictly decreasing in (0, y0] at step {k + 1}")
                y = nxt
                k += 1
            out[target] = y
    return out


@dataclass
class OrbitSample:
    K: int
    y_K: "gmpy2.mpfr"
    precision: int
    error_bound: float
    y_K_check: "gmpy2.mpfr | None" = None
    agreement_bits: float | None = None

    def __post_init__(self):
        if not self.y_K > 0:
            raise OrbitError("orbit sample must be positive")


def _agreement(a, b) -> float:
    if a == b:
        return float("inf")
    with gmpy2.context(gmpy2.get_context(), precision=64):
        return float(-gmpy2.log2(abs((a - b) / a)))


def iterate_samples(g: Expr, y0=Fraction(1), Ks: Iterable[int] = (10**6,), precision: int = 256,
                    rerun: bool = True) -> dict[int, OrbitSample]:
    """One orbit, sampled at every index in ``Ks``.

    With ``rerun`` every sample also carries the value from an independent
    ``precision + 64`` bit orbit.
    """
    Ks = sorted(set(Ks))
    y0 = Fraction(y0)
    if y0 <= 0:
        raise OrbitError("y0 must be positive")
    _check_budget(Ks[-1], precision)
    step = step_function(g)
    main = _orbit(step, y0, Ks, precision)
    check = _orbit(step, y0, Ks, precision + RERUN_EXTRA_BITS) if rerun else {}
    samples = {}
    for K in Ks:
        hi = check.get(K)
        samples[K] = OrbitSample(
            K=K,
            y_K=main[K],
            precision=precision,
            error_bound=float(ULP_PER_STEP * max(K, 1)),
            y_K_check=hi,
            agreement_bits=_agreement(main[K], hi) if hi is not None else None,
        )
    return samples


def iterate_map(g: Expr, y0=Fraction(1), K: int = 10**6, precision: int = 256,
                rerun: bool = True) -> OrbitSample:
    return iterate_samples(g, y0, (K,), precision, rerun)[K]


# ---------------------------------------------------------------------------
# Newton extraction
# ---------------------------------------------------------------------------


def newton_constant(series: AsymSeries, K: int, target, precision: int,
                    max_iter: int = NEWTON_MAX_ITER) -> tuple["gmpy2.mpfr", int]:
    """Solve ``series(K; C) = target`` for ``C``.

    The seed comes from the series cut at inner order 1, where ``C`` enters
    linearly; Newton then runs on the full polynomial-in-C series.
    """
    work = precision + 32
    seed_series = series.truncate(1)
    value0, slope0 = seed_series.evaluate(K, 0, work, derivative=True)
    if slope0 == 0:
        raise NewtonError("the free constant does not enter the first corrected order")
    with gmpy2.context(gmpy2.get_context(), precision=work):
        C = (target - value0) / slope0
        tol = gmpy2.mpfr(2) ** (-(precision - 8))
        last_residual = None
        for it in range(1, max_iter + 1):
            value, slope = series.evaluate(K, C, work, derivative=True)
            residual = value - target
            if slope == 0:
                raise NewtonError("zero derivative in Newton iteration")
            delta = residual / slope
            C = C - delta
            if abs(delta) < tol * max(1, abs(C)):
                with gmpy2.context(gmpy2.get_context(), precision=precision):
                    return +C, it
            if last_residual is not None and abs(residual) > 2 * last_residual and it > 3:
                raise NewtonError("Newton residual is not decreasing; series and orbit disagree")
            last_residual = abs(residual)
    raise NewtonError(f"Newton did not converge in {max_iter} iterations")


def digits_between(a, b, precision: int) -> int:
    """Number of decimal places ``d`` for which ``a`` and ``b`` rounded to ``d`` places agree.

    Counting stops at the first place where the roundings differ, so the
    result is never more than about ``-log10|a - b|``.  Rounding (rather than
    comparing raw printed prefixes) keeps 0.99999... and 1.00000... in step.
    """
    cap = decimal_digits(precision)
    if a == b:
        return cap
    if format_decimal(a, 0) != format_decimal(b, 0):
        return 0
    n = 0
    while n < cap and format_decimal(a, n + 1) == format_decimal(b, n + 1):
        n += 1
    return n


@dataclass
class DerivedOutput:
    label: str
    expression: str
    value: "gmpy2.mpfr"


@dataclass
class ConstantReport:
    C_estimate: "gmpy2.mpfr"
    digits_agreed: int
    K: int
    M: int
    precision: int
    newton_iters: int
    diagnostics: dict = field(default_factory=dict)
    derived_outputs: list[DerivedOutput] = field(default_factory=list)

    def C_text(self, digits: int | None = None) -> str:
        return format_decimal(self.C_estimate, digits or self.digits_agreed + 3)

    def to_json(self) -> dict:
        num, den = self.C_estimate.as_integer_ratio()
        return {
            "C": format_decimal(self.C_estimate, decimal_digits(self.precision) - 2),
            "C_exact": f"{num}/{den}",
            "digits_agreed": self.digits_agreed,
            "K": self.K,
            "M": self.M,
            "precision": self.precision,
            "newton_iters": self.newton_iters,
            "diagnostics": self.diagnostics,
            "derived_outputs": [
                {"label": d.label, "expression": d.expression,
                 "value": format_decimal(d.value, decimal_digits(self.precision) - 2)}
                for d in self.derived_outputs
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ConstantReport":
        """Inverse of :meth:`to_json`; derived values are recomputed from ``C``."""
        precision = int(d["precision"])
        num, den = (int(v) for v in d["C_exact"].split("/"))
        with gmpy2.context(gmpy2.get_context(), precision=precision):
            C = gmpy2.mpfr(gmpy2.mpq(num, den))
        outputs = [DerivedOutput(o["label"], o["expression"], derived_value(o["expression"], C))
                   for o in d.get("derived_outputs", [])]
        return cls(C, int(d["digits_agreed"]), int(d["K"]), int(d["M"]), precision,
                   int(d["newton_iters"]), dict(d.get("diagnostics", {})), outputs)


def format_decimal(x, digits: int) -> str:
    """Fixed-point decimal string with ``digits`` digits after the point."""
    return format(x, f".{max(digits, 1)}f")


def derived_value(expression: str, C):
    """Evaluate an expression in ``C`` (e.g. ``2*(C-1)``) at the estimate."""
    fn = compile_expr(parse(expression, "C"))
    with gmpy2.context(gmpy2.get_context(), precision=C.precision + 32):
        value = fn(C)
    with gmpy2.context(gmpy2.get_context(), precision=C.precision):
        return +value


def solve_constant(exp: NormalizedExpansion, sample: OrbitSample, *,
                   shifted_sample: OrbitSample | None = None,
                   side: str = "y",
                   derived: Sequence[tuple[str, str]] = ()) -> ConstantReport:
    """Match the truncated series to ``y_K`` and report ``C`` with digit diagnostics.

    ``digits_agreed`` is the number of decimal places on which the main
    estimate agrees with both the ``precision + 64`` bit rerun and the
    estimate at ``shifted_sample.K`` (usually ``2K``), less a guard of 2.
    """
    if exp.y_series.order < 2:
        raise NewtonError("need at least two inner orders to separate C from the leading terms")
    series = exp.y_series if side == "y" else exp.x_series
    if side not in ("y", "x"):
        raise ValueError("side must be 'y' or 'x'")

    def target(y, precision):
        if side == "y":
            return y
        with gmpy2.context(gmpy2.get_context(), precision=precision):
            return 1 / y

    P = sample.precision
    C, iters = newton_constant(series, sample.K, target(sample.y_K, P), P)
    diagnostics: dict = {}
    agreements = []
    if sample.y_K_check is not None:
        P_hi = P + RERUN_EXTRA_BITS
        C_hi, _ = newton_constant(series, sample.K, target(sample.y_K_check, P_hi), P_hi)
        d = digits_between(C, C_hi, P)
        diagnostics["C_precision_shift"] = format_decimal(C_hi, decimal_digits(P) - 2)
        diagnostics["digits_vs_precision_shift"] = d
        agreements.append(d)
    if shifted_sample is not None:
        C_2, _ = newton_constant(series, shifted_sample.K, target(shifted_sample.y_K, P), P)
        d = digits_between(C, C_2, P)
        diagnostics["K_shift"] = shifted_sample.K
        diagnostics["C_K_shift"] = format_decimal(C_2, decimal_digits(P) - 2)
        diagnostics["digits_vs_K_shift"] = d
        agreements.append(d)
    cap = decimal_digits(P)
    digits = min(agreements) - DIGIT_GUARD if agreements else cap - DIGIT_GUARD
    digits = max(0, min(cap, digits))
    outputs = [DerivedOutput(label, text, derived_value(text, C)) for label, text in derived]
    return ConstantReport(
        C_estimate=C,
        digits_agreed=digits,
        K=sample.K,
        M=exp.u_series.order,
        precision=P,
        newton_iters=iters,
        diagnostics=diagnostics,
        derived_outputs=outputs,
    )


def k_ladder(exp: NormalizedExpansion, samples: dict[int, OrbitSample], Ks: Iterable[int],
             side: str = "y") -> list[tuple[int, "gmpy2.mpfr"]]:
    """``|C(K) - C(2K)|`` for each ``K``; ``samples`` must hold both indices."""
    series = exp.y_series if side == "y" else exp.x_series
    out = []
    for K in Ks:
        ests = []
        for k in (K, 2 * K):
            s = samples[k]
            with gmpy2.context(gmpy2.get_context(), precision=s.precision):
                t = s.y_K if side == "y" else 1 / s.y_K
            ests.append(newton_constant(series, k, t, s.precision)[0])
        with gmpy2.context(gmpy2.get_context(), precision=samples[K].precision):
            out.append((K, abs(ests[0] - ests[1])))
    return out


def convergence_exponent(ladder: Sequence[tuple[int, "gmpy2.mpfr"]], floor: float = 0.0) -> float:
    """Least-squares slope of ``-log10 |C(K) - C(2K)|`` against ``log10 K``.

    Points at or below ``floor`` are rounding noise rather than truncation
    error and are dropped; with fewer than two points left the discrepancy is
    already at the floor and the slope is reported as infinite.
    """
    pts = [(math.log10(K), -math.log10(float(d))) for K, d in ladder if d > floor]
    if len(pts) < 2:
        return math.inf
    mx = sum(x for x, _ in pts) / len(pts)
    my = sum(v for _, v in pts) / len(pts)
    return sum((x - mx) * (v - my) for x, v in pts) / sum((x - mx) ** 2 for x, _ in pts)


def rounding_floor(precision: int) -> float:
    """Discrepancies below this are inside the orbit's rounding budget."""
    return math.ldexp(1.0, -(precision - RERUN_EXTRA_BITS))


# ---------------------------------------------------------------------------
# Infinite product over the x -> x + 1/x orbit
# ---------------------------------------------------------------------------


def product_r_tail_bound(terms: int) -> float:
    """Bound on the omitted part of ``ln r`` after ``terms`` factors."""
    return math.ldexp(math.log(2), -terms)


def product_r(f_q2: Expr | str = "x + 1/x", terms: int = 80, precision: int = 128):
    """``prod_{k>=0} (1 + 1/x_k^2)^(1/2^(k+1))`` over the orbit of ``f_q2`` from ``x0 = 1``."""
    if terms < 1:
        raise ValueError("terms must be at least 1")
    f = parse(f_q2, "x") if isinstance(f_q2, str) else f_q2
    fn = compile_expr(f)
    with gmpy2.context(gmpy2.get_context(), precision=precision + 32):
        x = gmpy2.mpfr(1)
        log_r = gmpy2.mpfr(0)
        weight = gmpy2.mpfr(1)
        for _ in range(terms):
            weight /= 2
            log_r += weight * gmpy2.log1p(1 / (x * x))
            x = fn(x)
        value = gmpy2.exp(log_r)
    with gmpy2.context(gmpy2.get_context(), precision=precision):
        return +value

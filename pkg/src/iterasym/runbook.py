"""Case configurations, the end-to-end pipeline, and fixture comparison."""
from __future__ import annotations

import decimal
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Any

import gmpy2

from .asymsolver import NormalizedExpansion, normalize_constant, solve_u_series
from .exprdsl import parse, poly
from .highprec import (ConstantReport, decimal_digits, format_decimal, iterate_samples, k_ladder,
                       solve_constant)
from .reciprocity import derive_g_series, ml_form_for, to_ml_form
from .seriescore.asym import AsymSeries
from .seriescore.scale import ScaleFactor

DEFAULT_K = 10**6
DEFAULT_M = 6
DEFAULT_DIGITS = 20
PRECISION_ENV = "ITERASYM_PRECISION"


def default_precision() -> int:
    return int(os.environ.get(PRECISION_ENV, "256"))


class CaseError(RuntimeError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass(frozen=True)
class Display:
    """A printed series: ``scale * series ~ sum coef * ln(k)**l * k**e``."""

    scale: tuple[tuple[Fraction, Fraction], ...]
    terms: tuple[tuple[Fraction, int, str], ...]

    @classmethod
    def from_json(cls, d: dict) -> "Display":
        scale = tuple((Fraction(b), Fraction(e)) for b, e in d.get("scale", []))
        terms = tuple((Fraction(e), int(l), str(c)) for e, l, c in d["terms"])
        return cls(scale, terms)

    def to_json(self) -> dict:
        return {
            "scale": [[str(b), str(e)] for b, e in self.scale],
            "terms": [[str(e), l, c] for e, l, c in self.terms],
        }


@dataclass(frozen=True)
class CaseConfig:
    name: str
    f_text: str
    y0: Fraction = Fraction(1)
    scale: tuple[tuple[Fraction, Fraction], ...] = ()
    M: int = DEFAULT_M
    K: int = DEFAULT_K
    precision: int = 256
    side: str = "y"
    derived_outputs: tuple[tuple[str, str], ...] = ()
    expected_C: str | None = None
    expected_digits: int = DEFAULT_DIGITS
    expected_derived: tuple[tuple[str, str], ...] = ()
    y_display: Display | None = None
    x_display: Display | None = None

    def __post_init__(self):
        for b, _ in self.scale:
            if b <= 0:
                raise ValueError(f"case {self.name}: scale base {b} must be positive")
        if self.side not in ("y", "x"):
            raise ValueError(f"case {self.name}: side must be 'y' or 'x'")
        if self.y0 <= 0:
            raise ValueError(f"case {self.name}: y0 must be positive")

    @property
    def report_scale(self) -> ScaleFactor:
        return ScaleFactor.from_factors(self.scale)

    @classmethod
    def from_json(cls, d: dict, defaults: dict | None = None) -> "CaseConfig":
        defaults = defaults or {}
        get = lambda key, fallback: d.get(key, defaults.get(key, fallback))  # noqa: E731
        expected = d.get("expected", {})
        derived = d.get("derived_outputs", [])
        unknown = set(d) - {"name", "f", "y0", "scale", "M", "K", "precision", "side",
                            "derived_outputs", "expected"}
        if unknown:
            raise ValueError(f"case {d.get('name')}: unknown keys {sorted(unknown)}")
        return cls(
            name=d["name"],
            f_text=d["f"],
            y0=Fraction(str(d.get("y0", "1"))),
            scale=tuple((Fraction(str(b)), Fraction(str(e))) for b, e in d.get("scale", [])),
            M=int(get("M", DEFAULT_M)),
            K=int(get("K", DEFAULT_K)),
            precision=int(get("precision", default_precision())),
            side=d.get("side", "y"),
            derived_outputs=tuple((o["label"], o["expr"]) for o in derived),
            expected_C=expected.get("C"),
            expected_digits=int(expected.get("digits", DEFAULT_DIGITS)),
            expected_derived=tuple((o["label"], o["expected"]) for o in derived if "expected" in o),
            y_display=Display.from_json(expected["y_display"]) if "y_display" in expected else None,
            x_display=Display.from_json(expected["x_display"]) if "x_display" in expected else None,
        )

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "name": self.name,
            "f": self.f_text,
            "y0": str(self.y0),
            "scale": [[str(b), str(e)] for b, e in self.scale],
            "M": self.M,
            "K": self.K,
            "precision": self.precision,
            "side": self.side,
        }
        expected_derived = dict(self.expected_derived)
        derived = []
        for label, text in self.derived_outputs:
            item = {"label": label, "expr": text}
            if label in expected_derived:
                item["expected"] = expected_derived[label]
            derived.append(item)
        out["derived_outputs"] = derived
        expected: dict[str, Any] = {}
        if self.expected_C is not None:
            expected["C"] = self.expected_C
            expected["digits"] = self.expected_digits
        if self.y_display is not None:
            expected["y_display"] = self.y_display.to_json()
        if self.x_display is not None:
            expected["x_display"] = self.x_display.to_json()
        out["expected"] = expected
        return out


# ---------------------------------------------------------------------------
# Fixture comparison
# ---------------------------------------------------------------------------


def compare_display(series: AsymSeries, display: Display) -> list[str]:
    """Exact coefficient-by-coefficient comparison; returns mismatch messages.

    Every ``(exponent, log power)`` slot down to the smallest printed exponent
    is compared, so terms the display omits must vanish in ``series``.
    """
    scaled = series * ScaleFactor.from_factors(display.scale)
    if not scaled.scale.is_rational():
        return [f"display scale leaves irrational factor {scaled.scale}"]
    q = scaled.scale.to_rational()
    lowest = min(e for e, _, _ in display.terms)
    if scaled.r0 - scaled.order > lowest:
        return [f"series order {scaled.order} does not reach k^({lowest})"]
    expected = {}
    for e, l, text in display.terms:
        m = scaled.r0 - e
        if m.denominator != 1 or m < 0:
            return [f"printed exponent {e} is off the k^({scaled.r0} - m) lattice"]
        expected[(int(m), l)] = poly(text)
    problems = []
    last_m = int(scaled.r0 - lowest)
    for m in range(last_m + 1):
        for l in range(m + 1):
            got = scaled[(m, l)] * q
            want = expected.pop((m, l), None)
            if want is None:
                if not got.is_zero():
                    problems.append(f"k^({scaled.r0 - m}) ln^{l}: expected 0, got {got}")
            elif got != want:
                problems.append(f"k^({scaled.r0 - m}) ln^{l}: expected {want}, got {got}")
    for (m, l), want in expected.items():
        problems.append(f"printed term k^({scaled.r0 - m}) ln^{l} = {want} is outside the ansatz")
    return problems


def matching_places(value, expected: str) -> int:
    """Decimal places of ``expected`` reproduced by ``value``.

    Printed constants may be rounded or truncated, so place ``d`` counts when
    either the rounded or the truncated forms agree; counting stops at the first
    place where neither does.
    """
    places = len(expected.partition(".")[2])
    num, den = value.as_integer_ratio()
    with decimal.localcontext() as ctx:
        ctx.prec = places + len(expected) + 40
        got = decimal.Decimal(int(num)) / decimal.Decimal(int(den))
        want = decimal.Decimal(expected)
        n = 0
        for d in range(places + 1):
            q = decimal.Decimal(1).scaleb(-d)
            if got.quantize(q, decimal.ROUND_HALF_EVEN) != want.quantize(q, decimal.ROUND_HALF_EVEN) \
                    and got.quantize(q, decimal.ROUND_DOWN) != want.quantize(q, decimal.ROUND_DOWN):
                return max(0, d - 1)
            n = d
    return n


@dataclass
class FixtureCheck:
    name: str
    passed: bool
    detail: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class CaseResult:
    name: str
    config: CaseConfig
    report: ConstantReport | None
    expansion: NormalizedExpansion | None
    checks: list[FixtureCheck]
    error: str | None
    seconds: float
    ladder: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "error": self.error,
            "definition": self.expansion.definition if self.expansion else None,
            "ml_form": self.expansion.ml.to_json() if self.expansion else None,
            "report": self.report.to_json() if self.report else None,
            "checks": [c.to_json() for c in self.checks],
            "k_ladder": [{"K": K, "C_K_minus_C_2K": f"{float(d):.3e}"} for K, d in self.ladder],
            "seconds": round(self.seconds, 3),
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except CaseError:
        raise
    except (ArithmeticError, ValueError) as exc:
        raise CaseError(name, str(exc)) from exc


def build_expansion(cfg: CaseConfig) -> NormalizedExpansion:
    f = _stage("parse", parse, cfg.f_text, "x")
    _stage("derive_g_series", derive_g_series, f)
    _, ml = _stage("to_ml_form", ml_form_for, f, cfg.M + 1)
    u = _stage("solve_u_series", solve_u_series, ml, cfg.M)
    return _stage("normalize_constant", normalize_constant, u, ml, cfg.report_scale)


def run_case(cfg: CaseConfig, *, check_K_shift: bool = True, ladder: tuple[int, ...] = ()) -> CaseResult:
    """Full pipeline for one case; never raises, errors land in the result.

    ``ladder`` lists extra indices ``K' < K`` at which ``|C(K') - C(2K')|`` is
    recorded from the same orbit (the convergence check in ``k_ladder``).
    """
    start = time.perf_counter()
    exp = report = None
    checks: list[FixtureCheck] = []
    steps: list = []
    try:
        exp = build_expansion(cfg)
        f = parse(cfg.f_text, "x")
        Ks = (cfg.K, 2 * cfg.K) if check_K_shift else (cfg.K,)
        Ks += tuple(k for K in ladder for k in (K, 2 * K))
        samples = _stage("iterate_map", iterate_samples, f, cfg.y0, Ks, cfg.precision)
        report = _stage(
            "solve_constant", solve_constant, exp, samples[cfg.K],
            shifted_sample=samples.get(2 * cfg.K), side=cfg.side, derived=cfg.derived_outputs,
        )
        checks = fixture_checks(cfg, exp, report)
        if ladder:
            top = (cfg.K,) if check_K_shift else ()
            steps = _stage("k_ladder", k_ladder, exp, samples, (*ladder, *top), side=cfg.side)
        error = None
    except CaseError as exc:
        error = str(exc)
    return CaseResult(cfg.name, cfg, report, exp, checks, error, time.perf_counter() - start, steps)


def fixture_checks(cfg: CaseConfig, exp: NormalizedExpansion, report: ConstantReport) -> list[FixtureCheck]:
    checks = []
    if cfg.expected_C is not None:
        places = matching_places(report.C_estimate, cfg.expected_C)
        checks.append(FixtureCheck(
            "C", places >= cfg.expected_digits,
            [f"{places} decimal places match {cfg.expected_C} (need {cfg.expected_digits})"],
        ))
    values = {d.label: d.value for d in report.derived_outputs}
    for label, expected in cfg.expected_derived:
        places = matching_places(values[label], expected)
        checks.append(FixtureCheck(
            f"derived:{label}", places >= cfg.expected_digits,
            [f"{places} decimal places match {expected} (need {cfg.expected_digits})"],
        ))
    if cfg.y_display is not None:
        problems = compare_display(exp.y_series, cfg.y_display)
        checks.append(FixtureCheck("y_display", not problems, problems))
    if cfg.x_display is not None:
        problems = compare_display(exp.x_series, cfg.x_display)
        checks.append(FixtureCheck("x_display", not problems, problems))
    return checks


# ---------------------------------------------------------------------------
# Runbooks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    name: str
    left: str
    right: str
    factor: Fraction
    digits: int = DEFAULT_DIGITS

    @classmethod
    def from_json(cls, d: dict) -> "Identity":
        return cls(d["name"], d["left"], d["right"], Fraction(str(d.get("factor", "1"))),
                   int(d.get("digits", DEFAULT_DIGITS)))


@dataclass
class Runbook:
    cases: list[CaseConfig]
    identities: list[Identity] = field(default_factory=list)

    @classmethod
    def from_json(cls, d: dict) -> "Runbook":
        defaults = d.get("defaults", {})
        cases = [CaseConfig.from_json(c, defaults) for c in d["cases"]]
        names = [c.name for c in cases]
        if len(set(names)) != len(names):
            raise ValueError("duplicate case names in runbook")
        return cls(cases, [Identity.from_json(i) for i in d.get("identities", [])])

    @classmethod
    def load(cls, path: str | Path) -> "Runbook":
        return cls.from_json(json.loads(Path(path).read_text()))

    def select(self, names: list[str]) -> "Runbook":
        missing = set(names) - {c.name for c in self.cases}
        if missing:
            raise ValueError(f"unknown cases: {sorted(missing)}")
        keep = [c for c in self.cases if c.name in names]
        kept = {c.name for c in keep}
        ids = [i for i in self.identities if i.left in kept and i.right in kept]
        return Runbook(keep, ids)


@dataclass
class IdentityResult:
    identity: Identity
    difference: Any
    passed: bool

    def to_json(self) -> dict:
        return {
            "name": self.identity.name,
            "relation": f"C({self.identity.left}) = {self.identity.factor} * C({self.identity.right})",
            "difference": f"{float(self.difference):.3e}" if self.difference is not None else None,
            "passed": self.passed,
        }


@dataclass
class RunbookResult:
    cases: list[CaseResult]
    identities: list[IdentityResult]
    seconds: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases) and all(i.passed for i in self.identities)

    def case(self, name: str) -> CaseResult:
        return next(c for c in self.cases if c.name == name)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "summary": {
                "cases": len(self.cases),
                "cases_passed": sum(c.passed for c in self.cases),
                "identities": len(self.identities),
                "identities_passed": sum(i.passed for i in self.identities),
            },
            "cases": [c.to_json() for c in self.cases],
            "identities": [i.to_json() for i in self.identities],
            "seconds": round(self.seconds, 3),
        }

    def summary_table(self) -> str:
        rows = [("case", "C", "digits", "fixtures", "time", "status")]
        for c in self.cases:
            if c.report is None:
                rows.append((c.name, "-", "-", "-", f"{c.seconds:.1f}s", f"ERROR {c.error}"))
                continue
            fixtures = f"{sum(x.passed for x in c.checks)}/{len(c.checks)}"
            rows.append((c.name, c.report.C_text(min(c.report.digits_agreed, 30)),
                         str(c.report.digits_agreed), fixtures, f"{c.seconds:.1f}s",
                         "pass" if c.passed else "FAIL"))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(r[i].ljust(widths[i]) for i in range(5)) + "  " + r[5] for r in rows]
        for i in self.identities:
            j = i.to_json()
            lines.append(f"identity {j['name']}: {j['relation']}, |diff| = {j['difference']}  "
                         + ("pass" if i.passed else "FAIL"))
        lines.append(f"{sum(c.passed for c in self.cases)}/{len(self.cases)} cases, "
                     f"{sum(i.passed for i in self.identities)}/{len(self.identities)} identities passed "
                     f"in {self.seconds:.1f}s")
        return "\n".join(lines)


def check_identity(identity: Identity, results: dict[str, CaseResult]) -> IdentityResult:
    left, right = results.get(identity.left), results.get(identity.right)
    if not left or not right or left.report is None or right.report is None:
        return IdentityResult(identity, None, False)
    a, b = left.report.C_estimate, right.report.C_estimate
    with gmpy2.context(gmpy2.get_context(), precision=max(a.precision, b.precision)):
        diff = abs(a - gmpy2.mpq(identity.factor.numerator, identity.factor.denominator) * b)
        bound = gmpy2.mpfr(10) ** (-identity.digits)
    return IdentityResult(identity, diff, bool(diff < bound))


def run_book(book: Runbook | str | Path, workers: int | None = None,
             ladder: tuple[int, ...] = ()) -> RunbookResult:
    """Run every case (in parallel across cases) and then the cross-case identities."""
    if not isinstance(book, Runbook):
        book = Runbook.load(book)
    start = time.perf_counter()
    workers = workers or min(len(book.cases), os.cpu_count() or 1)
    if workers <= 1:
        results = [run_case(c, ladder=ladder) for c in book.cases]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(partial(run_case, ladder=ladder), book.cases))
    by_name = {r.name: r for r in results}
    identities = [check_identity(i, by_name) for i in book.identities]
    return RunbookResult(results, identities, time.perf_counter() - start)


def report_to_json_text(result: RunbookResult) -> str:
    return json.dumps(result.to_json(), indent=2, sort_keys=False)


__all__ = [
    "CaseConfig", "CaseError", "CaseResult", "Display", "Identity", "Runbook", "RunbookResult",
    "compare_display", "matching_places", "run_case", "run_book", "build_expansion",
    "default_precision", "decimal_digits",
]

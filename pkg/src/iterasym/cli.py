"""Command-line front end.

    iterasym solve --f "sqrt(x+x^2)" [--scale 2^(1/2)] [--order 6] [--K 1000000]
    iterasym series --f "x+1/x" --order 4 [--latex]
    iterasym derive --f "x*exp(1/x)"
    iterasym runbook fixtures/reference.json [--json report.json]
    iterasym product-r [--terms 80]

Exit status is 0 only when every requested check passed.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

from .highprec import decimal_digits, format_decimal, product_r, product_r_tail_bound
from .reciprocity import derive_g_series, ml_form_for
from .render import render_text
from .runbook import (DEFAULT_K, DEFAULT_M, CaseConfig, Runbook, build_expansion,
                      default_precision, run_book, run_case)
from .seriescore.scale import ScaleFactor
from .exprdsl import parse

_FACTOR = re.compile(r"^\(?\s*([0-9/]+)\s*\)?\s*(?:\^\s*\(?\s*(-?[0-9/]+)\s*\)?)?$")


def parse_scale(text: str) -> tuple[tuple[Fraction, Fraction], ...]:
    """``"2^(1/2)"`` or ``"(3/2)^(1/3)*5"`` -> ``((2, 1/2),)`` etc."""
    factors = []
    if not text.strip():
        return ()
    for part in re.split(r"\*(?![^()]*\))", text.strip()):
        m = _FACTOR.match(part.strip())
        if not m:
            raise argparse.ArgumentTypeError(f"cannot read scale factor {part!r}; use base^exponent")
        base = Fraction(m.group(1))
        if base <= 0:
            raise argparse.ArgumentTypeError("scale bases must be positive")
        factors.append((base, Fraction(m.group(2) or 1)))
    return tuple(factors)


def _add_map_args(p: argparse.ArgumentParser, order_default: int = DEFAULT_M) -> None:
    p.add_argument("--f", required=True, help="map f(x) in the expression language")
    p.add_argument("--scale", type=parse_scale, default=(), help="report scale s, e.g. 2^(1/2)")
    p.add_argument("--order", type=int, default=order_default, help="inner truncation order M")


def _case_from_args(args, name: str = "cli") -> CaseConfig:
    derived = tuple((text, text) for text in args.derived or ())
    return CaseConfig(
        name=name,
        f_text=args.f,
        y0=Fraction(args.y0),
        scale=args.scale,
        M=args.order,
        K=args.K,
        precision=args.precision,
        side=args.side,
        derived_outputs=derived,
    )


def cmd_solve(args) -> int:
    cfg = _case_from_args(args)
    result = run_case(cfg)
    if result.error:
        print(result.error, file=sys.stderr)
        return 2
    report = result.report
    print(result.expansion.definition)
    print(f"C = {report.C_text()}")
    print(f"digits agreed: {report.digits_agreed} (K={report.K}, M={report.M}, "
          f"precision={report.precision} bits, Newton iterations {report.newton_iters})")
    for d in report.derived_outputs:
        print(f"{d.label} = {format_decimal(d.value, report.digits_agreed + 3)}")
    if args.json:
        payload = {"config": cfg.to_json(), **result.to_json()}
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_series(args) -> int:
    cfg = CaseConfig(name="cli", f_text=args.f, scale=args.scale, M=args.order)
    exp = build_expansion(cfg)
    s = exp.report_scale
    y_show = exp.y_series if s == ScaleFactor.one() else exp.y_series * s.inverse()
    x_show = exp.scaled_x
    lhs_y = "y_k" if s == ScaleFactor.one() else f"{s.inverse()} y_k"
    lhs_x = "x_k" if s == ScaleFactor.one() else f"{s} x_k"
    print(f"{lhs_y} ~ {render_text(y_show, latex=args.latex)}")
    print(f"{lhs_x} ~ {render_text(x_show, latex=args.latex)}")
    print(exp.definition)
    return 0


def cmd_derive(args) -> int:
    f = parse(args.f, "x")
    g = derive_g_series(f, args.g_order)
    _, ml = ml_form_for(f, args.coefficients)
    print(f"g(y) = {g.format()}")
    print(f"t = {ml.t}, tau = {ml.tau}, lambda = {ml.lam}")
    print("a = [" + ", ".join(str(a) for a in ml.a) + "]")
    return 0


def cmd_runbook(args) -> int:
    book = Runbook.load(args.file)
    if args.cases:
        book = book.select(args.cases.split(","))
    if args.K or args.precision:
        book = Runbook([_override(c, args) for c in book.cases], book.identities)
    result = run_book(book, workers=args.workers)
    print(result.summary_table())
    for case in result.cases:
        for check in case.checks:
            if not check.passed:
                print(f"{case.name}: fixture {check.name} failed", file=sys.stderr)
                for line in check.detail:
                    print(f"    {line}", file=sys.stderr)
    if args.json:
        Path(args.json).write_text(json.dumps(result.to_json(), indent=2) + "\n")
    return 0 if result.passed else 1


def _override(cfg: CaseConfig, args) -> CaseConfig:
    from dataclasses import replace

    return replace(cfg, K=args.K or cfg.K, precision=args.precision or cfg.precision)


def cmd_product_r(args) -> int:
    value = product_r(args.f, args.terms, args.precision)
    print(f"r = {format_decimal(value, min(decimal_digits(args.precision) - 2, args.terms * 3 // 10))}")
    print(f"tail bound on ln r: {product_r_tail_bound(args.terms):.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iterasym", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="expansion plus high-precision constant for one map")
    _add_map_args(p)
    p.add_argument("--K", type=int, default=DEFAULT_K)
    p.add_argument("--precision", type=int, default=default_precision())
    p.add_argument("--y0", default="1")
    p.add_argument("--side", choices=("y", "x"), default="y",
                   help="match the y-series to y_K (default) or the x-series to 1/y_K")
    p.add_argument("--derived", action="append", help="extra output expression in C, e.g. 2*(C-1)")
    p.add_argument("--json", help="write the report to this file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("series", help="print the normalized y and x expansions")
    _add_map_args(p, order_default=4)
    p.add_argument("--latex", action="store_true")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("derive", help="print g(y) = 1/f(1/y) and its step form")
    p.add_argument("--f", required=True)
    p.add_argument("--g-order", type=int, default=6)
    p.add_argument("--coefficients", type=int, default=4)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("runbook", help="run every case of a runbook file")
    p.add_argument("file")
    p.add_argument("--json", help="write the full report to this file")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--cases", help="comma-separated subset of case names")
    p.add_argument("--K", type=int, default=None, help="override K for every case")
    p.add_argument("--precision", type=int, default=None, help="override precision for every case")
    p.set_defaults(func=cmd_runbook)

    p = sub.add_parser("product-r", help="infinite product over the x + 1/x orbit")
    p.add_argument("--terms", type=int, default=80)
    p.add_argument("--precision", type=int, default=128)
    p.add_argument("--f", default="x + 1/x")
    p.set_defaults(func=cmd_product_r)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

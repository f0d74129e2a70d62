"""Plain-text and LaTeX rendering of asymptotic series."""
from __future__ import annotations

from fractions import Fraction

from .seriescore.asym import AsymSeries
from .seriescore.constpoly import ConstPoly
from .seriescore.scale import ScaleFactor


def _k_power(e: Fraction, latex: bool) -> str:
    if e == 0:
        return ""
    if latex:
        return "k" if e == 1 else f"k^{{{e}}}"
    return "k" if e == 1 else f"k^({e})"


def _log_power(l: int, latex: bool) -> str:
    if l == 0:
        return ""
    base = "\\ln(k)" if latex else "ln(k)"
    if l == 1:
        return base
    return f"{base}^{{{l}}}" if latex else f"{base}^{l}"


def _terms(series: AsymSeries, symbol: str, latex: bool) -> tuple[str, list[str]]:
    q, rest = series.scale.split()
    prefix = "" if not rest.powers else rest.format(latex)
    out = []
    for (m, l), c in series.terms.items():
        coeff = c * q
        mono = [p for p in (_log_power(l, latex), _k_power(series.r0 - m, latex)) if p]
        sep = " " if latex else "*"
        if coeff.is_const() and abs(coeff.constant_term()) == 1 and mono:
            sign = "-" if coeff.constant_term() < 0 else "+"
            body = sep.join(mono)
        elif coeff.is_const() or len([x for x in coeff.coeffs if x]) == 1:
            lead = next(x for x in coeff.coeffs if x)
            sign = "-" if lead < 0 else "+"
            body = sep.join([(-coeff if lead < 0 else coeff).format(symbol, latex)] + mono)
        else:
            sign = "+"
            inner = coeff.format(symbol, latex)
            wrapped = f"\\left({inner}\\right)" if latex else f"({inner})"
            body = sep.join([wrapped] + mono)
        out.append(f"{sign} {body}")
    return prefix, out


def render_text(series: AsymSeries, symbol: str = "C", latex: bool = False,
                show_order: bool = True) -> str:
    prefix, parts = _terms(series, symbol, latex)
    if not parts:
        body = "0"
    else:
        body = parts[0][2:] if parts[0].startswith("+") else "-" + parts[0][2:]
        for p in parts[1:]:
            body += " " + p
    if show_order:
        e = series.r0 - (series.order + 1)
        big_o = f"\\ln(k)^{{{series.order + 1}}} {_k_power(e, True)}" if latex else \
            f"ln(k)^{series.order + 1}*{_k_power(e, False)}"
        body += f" + O({big_o})"
    if prefix:
        body = f"{prefix} \\left({body}\\right)" if latex else f"{prefix}*({body})"
    return body


def render_latex(series: AsymSeries, symbol: str = "C") -> str:
    return render_text(series, symbol, latex=True)


def render_scaled(series: AsymSeries, by: ScaleFactor, symbol: str = "C", latex: bool = False) -> str:
    return render_text(series * by, symbol, latex)


__all__ = ["render_text", "render_latex", "render_scaled", "ConstPoly"]

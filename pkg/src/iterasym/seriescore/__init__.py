"""Exact series algebra: rational polynomials in C, Puiseux series, asymptotic series."""
from .asym import AsymError, AsymSeries, a_eval, a_mul, a_pow_int, a_reciprocal, a_shift
from .constpoly import ConstPoly
from .puiseux import (
    INF,
    LatticeError,
    PuiseuxSeries,
    SeriesError,
    p_add,
    p_exp,
    p_invert_unit,
    p_log1p,
    p_mul,
    p_pow_rational,
)
from .scale import ScaleFactor

__all__ = [
    "AsymError", "AsymSeries", "ConstPoly", "INF", "LatticeError", "PuiseuxSeries",
    "ScaleFactor", "SeriesError", "a_eval", "a_mul", "a_pow_int", "a_reciprocal",
    "a_shift", "p_add", "p_exp", "p_invert_unit", "p_log1p", "p_mul", "p_pow_rational",
]

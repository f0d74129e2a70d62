"""Asymptotic expansions and high-precision constants for divergent
one-dimensional recurrences ``x_{k+1} = f(x_k)``."""

from .asymsolver import NormalizedExpansion, expand_map, normalize_constant, solve_u_series
from .exprdsl import parse
from .highprec import ConstantReport, iterate_map, product_r, solve_constant
from .reciprocity import MLForm, derive_g_series, ml_form_for, to_ml_form

__version__ = "0.1.0"

__all__ = [
    "parse", "derive_g_series", "to_ml_form", "ml_form_for", "MLForm",
    "solve_u_series", "normalize_constant", "expand_map", "NormalizedExpansion",
    "iterate_map", "solve_constant", "product_r", "ConstantReport",
]

"""Superposability analysis of Lagrangian densities.

The package parses Lagrangians written in a small text language, classifies
each term by the powers of a field and its first derivatives it contains,
derives Euler-Lagrange equations, checks gauge-group structure constants,
and numerically tests the composition and moment expansion of transition
kernels.
"""
__version__ = "0.1.0"

from .classify import EXISTENTIAL, PER_FIELD, classify_lagrangian, classify_term, collapse_analysis
from .eom import Equation, euler_lagrange, eom_degree
from .gauge import StructureConstantTable, builtin_table, su_n_structure_constants
from .parser import ParseError, parse_lagrangian, render
from .symbolic import Lagrangian, Monomial, Polynomial, normalize

__all__ = [
    "EXISTENTIAL",
    "PER_FIELD",
    "Equation",
    "Lagrangian",
    "Monomial",
    "ParseError",
    "Polynomial",
    "StructureConstantTable",
    "builtin_table",
    "classify_lagrangian",
    "classify_term",
    "collapse_analysis",
    "eom_degree",
    "euler_lagrange",
    "normalize",
    "parse_lagrangian",
    "render",
    "su_n_structure_constants",
    "__version__",
]

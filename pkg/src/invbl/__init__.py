"""Inverse Brascamp-Lieb data: classification, Gaussian constants, positivity domains."""
from .problem import Problem, Decomposition, ValidationError, validate, b_plus, b_zero_plus
from .classify import classify, decompose, Classification
from .solver import (solve_D, evaluate_gaussian, stationarity_residual, evaluate_translated,
                     shift_form, quad_gap, geometric_check, cdp_check, SolveResult)

__all__ = [
    "Problem", "Decomposition", "ValidationError", "validate", "b_plus", "b_zero_plus",
    "classify", "decompose", "Classification", "solve_D", "evaluate_gaussian",
    "stationarity_residual", "evaluate_translated", "shift_form", "quad_gap",
    "geometric_check", "cdp_check", "SolveResult",
]

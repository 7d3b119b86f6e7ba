"""Primal-dual gradient descent-ascent for unconstrained binary optimization."""

from .constraints import ConstraintFunction, DomainError
from .kcut import KCutReport, kcut_solve, softmax_cols
from .poly import DimensionError, MultilinearPolynomial, PolynomialError
from .problems import (CnfFormula, WeightedGraph, cnf_to_poly, decode_cut, decode_mis,
                       decode_sat, maxcut_to_poly, mis_to_poly)
from .solver import (ConfigError, NumericFailure, SolveReport, SolverConfig, binarity_gap,
                     dual_lower_bound, snap, solve)

__version__ = "0.1.0"

__all__ = [
    "ConstraintFunction", "DomainError", "KCutReport", "kcut_solve", "softmax_cols",
    "DimensionError", "MultilinearPolynomial", "PolynomialError", "CnfFormula",
    "WeightedGraph", "cnf_to_poly", "decode_cut", "decode_mis", "decode_sat",
    "maxcut_to_poly", "mis_to_poly", "ConfigError", "NumericFailure", "SolveReport",
    "SolverConfig", "binarity_gap", "dual_lower_bound", "snap", "solve",
]

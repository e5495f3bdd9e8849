"""Toeplitz determinants compressed to model spaces of finite Blaschke products."""

from .determinants import DeterminantReport, LogDet
from .factorization import (
    CanonicalFactorization,
    FactorizationError,
    FactorizationParams,
    composed_mean,
    factorize,
    geometric_mean,
)
from .laurent import MatrixLaurentSeries, SymbolError, multiply, winding_number
from .modelspace import BlaschkeProduct, ZeroError, ZeroSequenceGenerator, qu_matrix, tm_basis
from .operators import (
    OperatorError,
    analytic_compression_det,
    compression_matrix,
    fredholm_det,
    hankel_fredholm_det,
    hankel_product,
    qu_restricted_det,
)
from .verify import Tolerances, bo_report, strong_convergence_probe, szego_sweep

__version__ = "0.1.0"

__all__ = [
    "BlaschkeProduct",
    "CanonicalFactorization",
    "DeterminantReport",
    "FactorizationError",
    "FactorizationParams",
    "LogDet",
    "MatrixLaurentSeries",
    "OperatorError",
    "SymbolError",
    "Tolerances",
    "ZeroError",
    "ZeroSequenceGenerator",
    "analytic_compression_det",
    "bo_report",
    "composed_mean",
    "compression_matrix",
    "factorize",
    "fredholm_det",
    "geometric_mean",
    "hankel_fredholm_det",
    "hankel_product",
    "multiply",
    "qu_matrix",
    "qu_restricted_det",
    "strong_convergence_probe",
    "szego_sweep",
    "tm_basis",
    "winding_number",
]

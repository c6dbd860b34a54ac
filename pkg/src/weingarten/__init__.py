"""Prescribed Weingarten curvature sigma_k(kappa) = psi for starshaped graphs in
warped products I x_h M: symmetric-function calculus, graph geometry, a
damped Newton solver, the continuity method and hypothesis diagnostics."""

from weingarten._kernels import BACKEND
from weingarten.errors import (AdmissibilityError, ConfigError, ContinuationError, DomainError,
                               GeometryError, SolverError, ValidationError, WeingartenError)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AdmissibilityError", "ConfigError", "ContinuationError", "DomainError",
    "GeometryError", "SolverError", "ValidationError", "WeingartenError",
]

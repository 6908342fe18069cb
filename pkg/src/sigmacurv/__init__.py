"""Curvature estimates for sigma_{n-1} equations: symmetric functions, cones,
the concavity inequality, radial-graph geometry, a Newton solver and
maximum-principle diagnostics."""

from .errors import (
    AdmissibilityError,
    ConeViolationError,
    DomainError,
    NonConvergenceError,
    RHSPositivityError,
    SamplingError,
    SingularityError,
    ViscosityRegimeError,
)
from .symfun import LambdaVec, sigma, sigma_grad, sigma_hess, sigma_omit

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConeViolationError",
    "DomainError",
    "LambdaVec",
    "NonConvergenceError",
    "RHSPositivityError",
    "SamplingError",
    "SingularityError",
    "ViscosityRegimeError",
    "sigma",
    "sigma_grad",
    "sigma_hess",
    "sigma_omit",
]

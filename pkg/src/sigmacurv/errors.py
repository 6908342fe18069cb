"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(ArithmeticError):
    """A division by an exactly-zero quantity would be required."""


class ConeViolationError(DomainError):
    """The input eigenvalue vector is not in the required Garding cone."""


class SamplingError(RuntimeError):
    """The rejection sampler exhausted its budget."""

    def __init__(self, message, attempts):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class RHSPositivityError(DomainError):
    """The prescribed right-hand side evaluated to a non-positive value."""


class NonConvergenceError(RuntimeError):
    """Newton iteration did not reach tolerance; carries the best iterate."""

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = history or []


class AdmissibilityError(RuntimeError):
    """No damped step keeps the iterate inside the admissible cone."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ViscosityRegimeError(RuntimeError):
    """Pointwise checks refused because the top curvature is (nearly) multiple."""

    code = "viscosity-regime"

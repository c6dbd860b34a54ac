"""Exception hierarchy shared across the package."""


class WeingartenError(Exception):
    """Base class for all package errors."""


class DomainError(WeingartenError, ValueError):
    """An argument lies outside the domain of an operation."""


class AdmissibilityError(WeingartenError):
    """A principal curvature vector is not in the Gamma_k cone."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class GeometryError(WeingartenError):
    """Degenerate geometric data (e.g. a non positive definite metric)."""


class ConfigError(WeingartenError):
    """Invalid run configuration."""


class ValidationError(WeingartenError):
    """A structural condition on a user-supplied function failed."""

    def __init__(self, message, condition=None, point=None):
        super().__init__(message)
        self.condition = condition
        self.point = point


class SolverError(WeingartenError):
    """Newton iteration failed; ``diagnostics`` holds the recorded history."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class DivergenceError(SolverError):
    pass


class SingularSystemError(SolverError):
    pass


class IterationLimitError(SolverError):
    pass


class ContinuationError(WeingartenError):
    """Continuation stalled; ``last_s`` is the last parameter value reached."""

    def __init__(self, message, last_s, history=None):
        super().__init__(message)
        self.last_s = last_s
        self.history = list(history or [])

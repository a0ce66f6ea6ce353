"""Exception types shared across the package."""


class DiscSteerError(Exception):
    """Base class for all package errors."""


class DomainError(DiscSteerError):
    """An argument lies outside the supported range."""


class ConvergenceError(DiscSteerError):
    """An iterative routine failed to converge (implementation bug, not user error)."""


class ConditioningError(DiscSteerError):
    """A linear system is too ill-conditioned to solve reliably."""


class AdmissibilityError(DiscSteerError):
    """A control signal or state violates an admissibility constraint."""

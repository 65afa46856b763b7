"""Exception types shared across the toolkit."""


class QhideError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(QhideError, ValueError):
    """Operator or vector dimensions do not match the expected layout."""


class LabelError(QhideError, KeyError):
    """Unknown or colliding register label."""


class DomainError(QhideError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class InvalidStateError(QhideError, ValueError):
    """Matrix fails the density-operator invariants beyond tolerance."""


class ValidityError(QhideError, ValueError):
    """Protocol or measurement object violates its structural constraints."""


class AccessError(QhideError, PermissionError):
    """Party subset is not authorized for the requested reconstruction."""


class SolverError(QhideError, RuntimeError):
    """Numerical solver failed to converge to an acceptable solution."""


class UsageError(QhideError, ValueError):
    """Invalid command-line or configuration input."""

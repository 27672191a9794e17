"""Exception types shared across the package."""


class QFShiftError(Exception):
    """Base class for all package errors."""


class SingularityError(QFShiftError, ZeroDivisionError):
    """Evaluation point sits on (or numerically at) a pole."""

    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class CapabilityError(QFShiftError, ValueError):
    """Request exceeds a configured capability, e.g. derivative order."""


class QuadratureError(QFShiftError, ArithmeticError):
    """Quadrature error estimate stayed above tolerance.

    ``partial`` carries the best value obtained so far.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DomainError(QFShiftError, ValueError):
    """Input lies outside the domain where a formulation is defined."""


class ConfigError(QFShiftError, ValueError):
    """Malformed or invalid run configuration."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line

"""Exception and warning types shared across the package."""


class LeastEnergyError(Exception):
    """Base class for all package errors."""


class DomainError(LeastEnergyError, ValueError):
    """An operation was called outside its mathematical domain."""


class ConsistencyViolation(LeastEnergyError):
    """g is not the gradient of G at some sample point."""

    def __init__(self, message, worst_point=None, residual=None):
        super().__init__(message)
        self.worst_point = worst_point
        self.residual = residual


class NotBracketed(LeastEnergyError):
    """A bisection could not find a sign change. ``scanned`` holds (t, value) pairs."""

    def __init__(self, message, scanned=None):
        super().__init__(message)
        self.scanned = scanned if scanned is not None else []


class NoPositiveV(LeastEnergyError):
    pass


class Diverged(LeastEnergyError):
    pass


class NotConverged(LeastEnergyError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CollapsedToZero(LeastEnergyError):
    pass


class DegenerateDenominator(LeastEnergyError, ZeroDivisionError):
    pass


class StepFailure(LeastEnergyError):
    pass


class BracketInvalid(LeastEnergyError):
    pass


class NoGroundState(LeastEnergyError):
    pass


class ConfigError(LeastEnergyError):
    """Config parse/validation failure. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ShapeMismatch(LeastEnergyError):
    pass


class TruncationWarning(UserWarning):
    """Dilation pushed a non-negligible part of the field off the grid."""


class SubcriticalityWarning(UserWarning):
    """Nonlinearity growth is outside the subcritical window p < q < Np/(N-p)."""

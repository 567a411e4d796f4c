"""Exception types raised across the package."""


class GhostFringeError(Exception):
    """Base class for all package errors."""


class ValidationError(GhostFringeError, ValueError):
    """An argument or configuration violates a documented constraint."""


class AxisMismatchError(ValidationError):
    """Two fields or accumulators do not share the same sample axis."""


class SamplingError(ValidationError):
    """A grid is too coarse for the requested feature or coherence scale."""


class AliasingError(GhostFringeError):
    """Spectral propagation would wrap energy around the periodic window."""


class InsufficientDataError(GhostFringeError):
    """Too few realizations (or too little light) to form an estimate."""


class QuadratureError(GhostFringeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class UnsupportedCaseError(GhostFringeError):
    """The analytic oracle has no formula for the requested configuration."""


class ConfigError(ValidationError):
    """Malformed or inconsistent scenario configuration text."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno

"""Exception types raised across the package."""


class RelBoltzError(Exception):
    """Base class for all package errors."""


class DomainError(RelBoltzError, ValueError):
    """An argument lies outside the domain of an operation."""


class DegenerateCollisionError(DomainError):
    """The collision is degenerate (e.g. zero relative momentum)."""


class SingularAngleError(DomainError):
    """A cross section was evaluated at a singular scattering angle."""


class InvalidTransformError(DomainError):
    """A matrix fails the Lorentz condition."""


class DivergenceError(RelBoltzError):
    """A fixed-point iteration failed to converge."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(RelBoltzError, ValueError):
    """Malformed or inconsistent run configuration."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

"""Exception types shared across the package."""


class QmineError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(QmineError):
    """Array shapes or site indices inconsistent with the model size."""


class ConvergenceError(QmineError):
    """Iterative solver failed to reach the requested tolerance.

    Carries the best residual reached so callers can decide whether the
    partial result is still usable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericError(QmineError):
    """Non-finite values appeared where finite arithmetic was expected."""


class DatasetFormatError(QmineError):
    """A bitstring dataset file violates the on-disk format."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigurationError(QmineError):
    """User-supplied configuration is invalid (CLI exit code 2)."""

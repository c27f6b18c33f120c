"""Exception hierarchy shared across the package."""


class ArcmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ArcmError):
    """Invalid model spec, hyperparameters, or run configuration."""


class ParseError(ArcmError):
    """Malformed dataset or config file; message carries coordinates."""


class NumericError(ArcmError):
    """Non-finite value produced where a finite one is required."""


class SolverFailureError(ArcmError):
    """Subproblem solver did not converge; carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CertificateError(ArcmError):
    """Approximate step violates the basic decrease requirement."""


class InsufficientDataError(ArcmError):
    """Trace too short for the requested diagnostic."""

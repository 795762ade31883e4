"""Exception hierarchy.

The CLI maps ``ValidationError`` subclasses to exit code 1 and
``NumericalError`` subclasses to exit code 2.
"""


class FracSpreadError(Exception):
    pass


class ValidationError(FracSpreadError, ValueError):
    """Invalid input, configuration, or a failed certificate."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CertificateError(ValidationError):
    """A numerical certificate (bound, residual sign) was violated."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InsufficientDataError(ValidationError):
    pass


class NumericalError(FracSpreadError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    pass


class BlowUpError(NumericalError):
    pass


class GuardBandError(NumericalError):
    """Mass reached the outer guard band; the periodic box is too small."""


class ConsistencyError(NumericalError):
    """Sampled data contradicted an analytic bound."""

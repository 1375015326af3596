"""Exception and warning types raised across the package."""


class FitsinkError(Exception):
    """Base class for domain errors; the CLI maps these to exit code 1."""


class EmptyMatrix(FitsinkError):
    pass


class NonPositiveInput(FitsinkError, ValueError):
    pass


class NotConverged(FitsinkError):
    pass


class DivisionByZero(FitsinkError, ArithmeticError):
    """A row or column sum vanished inside a scaling step (empty support)."""


class UnknownLabel(FitsinkError, LookupError):
    pass


class DimensionMismatch(FitsinkError, ValueError):
    pass


class GaugeMismatch(FitsinkError):
    pass


class ParseError(FitsinkError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingColumn(ParseError):
    pass


class SchemaVersionMismatch(FitsinkError):
    pass


class NotStationary(UserWarning):
    """Barrier Hessian requested at a point that is not a stationary point."""


class EmptyRemoved(UserWarning):
    """All-zero rows or columns were dropped from a matrix."""

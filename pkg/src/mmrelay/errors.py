"""Exception types shared across the package."""


class InvalidParameter(ValueError):
    """A model parameter is outside its valid domain."""


class NumericalFailure(RuntimeError):
    """A quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InputFormatError(ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UndefinedConditional(ValueError):
    """A conditional expectation was requested on a zero-probability event."""

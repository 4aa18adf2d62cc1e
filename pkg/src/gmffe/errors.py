"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """Malformed text input; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(ArithmeticError):
    """A computation produced a non-finite value where a finite one was required."""


class UnsupportedRegimeError(ValidationError):
    """The requested computation is only defined for a narrower class of inputs."""

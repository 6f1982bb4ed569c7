"""Exception types shared across the package."""


class DuolinkError(Exception):
    """Base class for all errors raised by duolink."""


class ParseError(DuolinkError):
    """A log file (or stream) could not be parsed.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(DuolinkError):
    """Input data violates a documented invariant (not a syntax problem)."""

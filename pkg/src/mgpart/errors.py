"""Exception types shared across the package."""


class MgpartError(Exception):
    """Base class for all package errors."""


class GraphFormatError(MgpartError):
    """Raised on malformed .mg input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MgpartError, ValueError):
    """Invalid argument or graph state for the requested operation."""


class InfeasibleError(MgpartError):
    """No admissible configuration exists within the given budget."""


class ComputationError(MgpartError):
    """A numerical routine failed an internal sanity check."""

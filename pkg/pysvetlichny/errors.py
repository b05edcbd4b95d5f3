"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class SvetlichnyError(Exception):
    """Base class for all pysvetlichny errors.

    Attributes:
        exit_code: Process status the CLI uses when the error escapes a command
    """

    exit_code = 2

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InvalidArgumentError(SvetlichnyError, ValueError):
    """Raised when an argument violates an operation's precondition."""


class UnsupportedError(SvetlichnyError):
    """Raised for inputs outside the supported range (e.g. N > 5, k > 4)."""


class NumericalFailureError(SvetlichnyError):
    """Raised when a numerical procedure cannot produce a result."""

    exit_code = 3


class DegenerateInputError(SvetlichnyError):
    """Raised when an isometry output vanishes."""

    exit_code = 3


class StrategySpecError(InvalidArgumentError):
    """Raised when a strategy document cannot be turned into a strategy.

    Attributes:
        field: Dotted path of the offending JSON field
        line: Line number for syntax errors (optional)
        column: Column number for syntax errors (optional)
    """

    def __init__(
        self,
        field: str,
        message: str,
        line: int | None = None,
        column: int | None = None,
    ):
        self.field = field
        self.line = line
        self.column = column
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{field}: {message}{location}")

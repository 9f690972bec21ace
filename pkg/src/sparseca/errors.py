"""Exception types shared across the package."""


class SparseCAError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SparseCAError, ValueError):
    """Invalid argument: bad shape, out-of-range parameter, non-finite data."""


class SingularMarginError(InputError):
    """A row or column margin is zero, making the weighted metrics singular."""

    def __init__(self, axis: str, label: str):
        self.axis = axis
        self.label = label
        super().__init__(f"zero {axis} margin for {label!r}")


class DegenerateInputError(InputError):
    """Input is degenerate for the requested operation (e.g. all-zero vector)."""


class ParseError(InputError):
    """Malformed CSV input. Carries 1-based line and column positions."""

    def __init__(self, message: str, line: int, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{message} ({where})")

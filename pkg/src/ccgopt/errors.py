"""Exception types shared across the package."""


class CcgoptError(Exception):
    """Base class for all package errors."""


class GraphFormatError(CcgoptError):
    """Raised when a graph or ZDD text file cannot be parsed."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ConfigurationError(CcgoptError):
    """Raised when inputs are structurally valid but inconsistent
    (e.g. a strategy class that does not match the graph designation)."""


class EmptyFamilyError(CcgoptError):
    """Raised when an operation requires a nonempty strategy family."""


class EnumerationOverflowError(CcgoptError):
    """Raised when explicit enumeration would exceed the caller's limit."""


class ArithmeticDomainError(CcgoptError):
    """Raised when a tape operation would produce NaN/inf or leave the
    domain of the primitive (log of a nonpositive value, division by zero)."""


class GridTooLargeError(CcgoptError):
    """Raised when an exhaustive parameter grid exceeds the point budget."""

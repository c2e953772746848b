"""Exception hierarchy shared by all georay modules."""


class GeorayError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GeorayError):
    """Invalid mathematical input: degenerate boxes, mismatched grids,
    identically -inf operands, non-concave data where concavity is required."""


class ParseError(GeorayError):
    """Malformed input file. Carries an optional (line, column) position."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ResourceError(GeorayError):
    """A configured size cap would be exceeded."""

"""Exception hierarchy shared across the library, service and CLI."""


class ShapeMarksError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InvalidInputError(ShapeMarksError):
    """Malformed or out-of-contract input data."""

    exit_code = 3


class GridMismatchError(InvalidInputError):
    """Two discretized curves do not share a common grid size."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally valid but degenerate for the requested analysis."""


class NumericalError(ShapeMarksError):
    """A numerical routine failed to produce a usable result."""

    exit_code = 4

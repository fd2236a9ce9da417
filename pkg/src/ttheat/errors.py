"""Exception types raised by the solver components."""


class InvalidInputError(ValueError):
    """Malformed arguments: shape mismatch, empty or non-finite data."""


class BoundsError(IndexError):
    """Index outside the mode sizes of a tensor."""


class ResourceError(MemoryError):
    """Densification request above the configured memory cap."""


class SingularMapError(ValueError):
    """Coordinate map with a non-positive derivative."""


class SingularSystemError(ArithmeticError):
    """Zero pivot met while solving a tridiagonal system."""


class DivergenceError(RuntimeError):
    """Time integration produced non-finite or exploding values."""

    def __init__(self, message, step=None, level=None):
        super().__init__(message)
        self.step = step
        self.level = level

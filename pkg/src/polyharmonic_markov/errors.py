class PolyharmonicError(Exception):
    """Base class of all domain errors."""


class PolySyntaxError(PolyharmonicError, ValueError):
    """A polynomial text could not be parsed.

    Args:
        message (str): human readable description.
        position (int | None): 0-based character offset of the offending
            input, ``None`` when the error is at the end of the text.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class DimensionError(PolyharmonicError, ValueError):
    """Ambient dimensions do not match or are below 2."""


class MeasureError(PolyharmonicError, ValueError):
    """A measure is malformed or violates a support requirement."""


class TruncationError(PolyharmonicError):
    """A truncated series is too short to decide the requested quantity."""


class EvaluationError(PolyharmonicError, ValueError):
    """Numeric evaluation requested outside its domain."""

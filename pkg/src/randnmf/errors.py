"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class ParameterError(ValueError):
    """An option value is out of its valid range."""


class DataError(ValueError):
    """Input data is malformed, non-finite, or violates a sign constraint."""

class DataError(ValueError):
    """Malformed or inconsistent input data (images, masks, parameter files)."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values."""

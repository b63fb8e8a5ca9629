class NumericalError(ArithmeticError):
    """Raised when a computation produces unusable floating-point results."""

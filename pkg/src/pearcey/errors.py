"""Exception hierarchy.  The CLI maps ``ValidationError`` to exit code 2 and
``NumericalError`` to exit code 3."""


class PearceyError(Exception):
    pass


class ValidationError(PearceyError, ValueError):
    """Bad input: out-of-range parameters, malformed regions or scenarios."""


class NumericalError(PearceyError, ArithmeticError):
    """A computation could not be carried out to the requested accuracy."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(NumericalError):
    pass


class DegeneracyError(NumericalError):
    pass


class ConditioningError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class OutOfRangeError(NumericalError):
    """A probability fell outside [0, 1] by more than the allowed slack."""

    def __init__(self, message, value=None):
        super().__init__(message, residual=value)
        self.value = value


class FeasibilityError(NumericalError):
    pass

"""Exception types raised by the solvers."""


class SingularError(ArithmeticError):
    """A pivot or divisor is too small to divide by.

    For the Sylvester solvers this means some eigenvalue of ``A`` is
    (numerically) the negative of an eigenvalue of ``B``, so the equation has
    no unique solution.
    """

    def __init__(self, message, pivot=0.0):
        super().__init__(message)
        self.pivot = pivot


class UndefinedResidualError(ValueError):
    """The relative residual has a zero denominator."""

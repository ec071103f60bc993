"""Exception types raised by imcap."""


class IMCapError(Exception):
    """Base class for all imcap errors."""


class InvalidInputError(IMCapError, ValueError):
    """Input violates a documented precondition (non-finite, wrong shape, ...)."""


class DomainError(IMCapError, ValueError):
    """Argument outside the mathematical domain of a function."""


class AccuracyError(IMCapError, ArithmeticError):
    """Requested accuracy could not be reached.

    Attributes
    ----------
    estimate : float
        Best value obtained before giving up (may be ``nan``).
    achieved : float
        Achieved error bound (relative unless stated otherwise).
    """

    def __init__(self, message, estimate=float("nan"), achieved=float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved


class UnsupportedError(IMCapError, ValueError):
    """Requested size, order or option is not supported."""

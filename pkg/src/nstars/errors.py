"""Exception types shared across the package."""


class NStarsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(NStarsError, ValueError):
    pass


class DomainError(NStarsError, ValueError):
    """A Gamma-function argument is outside the positive reals."""


class SingularIdentity(NStarsError, ArithmeticError):
    """The closed-form Gamma sum degenerates (a - b + 1 == 0)."""


class DivergentSum(NStarsError, ArithmeticError):
    pass


class DivergentMoment(NStarsError, ArithmeticError):
    pass


class EmptySampler(NStarsError, LookupError):
    pass


class InsufficientData(NStarsError, ValueError):
    """Fewer than two usable rows survive the filters of a log-log fit."""


class InvariantViolation(NStarsError, RuntimeError):
    """A conservation identity of the simulated graph does not hold."""

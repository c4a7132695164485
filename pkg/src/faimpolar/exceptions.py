"""Exception hierarchy shared by all faimpolar modules."""


class FaimError(Exception):
    """Base class for every error raised by faimpolar."""


class ModelError(FaimError, ValueError):
    """The model cannot be analyzed."""


class NonStochastic(ModelError):
    """A kernel row does not sum to one."""


class NotErgodic(ModelError):
    """The state chain is reducible or periodic."""


class NotConverged(ModelError):
    """An iterative solve did not reach its residual target."""


class InvalidParameter(FaimError, ValueError):
    pass


class DomainError(FaimError, ValueError):
    pass


class BudgetExceeded(FaimError):
    """A computation would exceed its configured size budget.

    Attributes
    ----------
    largest_feasible : int or None
        The largest level (or block length) that fit in the budget, when known.
    """

    def __init__(self, message, largest_feasible=None):
        super().__init__(message)
        self.largest_feasible = largest_feasible


class LengthMismatch(FaimError, ValueError):
    pass


class LengthNotPowerOfTwo(FaimError, ValueError):
    pass


class ImpossibleInput(FaimError):
    """A forced channel input has zero probability in a reached state."""


class InvalidRate(FaimError, ValueError):
    pass

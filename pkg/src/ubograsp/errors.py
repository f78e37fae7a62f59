"""Exception types shared across the package."""


class UbograspError(Exception):
    """Base class for package errors."""


class NumericalError(UbograspError, ArithmeticError):
    """A linear-algebra step failed even after jitter repair.

    ``theta_index`` names the hyperparameter sample whose Gram matrix could
    not be factorized; ``iteration`` is filled in by the optimizer loop.
    """

    def __init__(self, message, theta_index=None, iteration=None):
        super().__init__(message)
        self.theta_index = theta_index
        self.iteration = iteration


class StateError(UbograspError, RuntimeError):
    """An operation was called on an object that is not ready for it."""


class ContractError(UbograspError, RuntimeError):
    """A caller violated an operation precondition (e.g. closing a colliding hand)."""


class InputError(UbograspError, OSError):
    """Harness input files are missing or unreadable."""

    def __init__(self, message, files=()):
        super().__init__(message)
        self.files = list(files)

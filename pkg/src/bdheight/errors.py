"""Exception hierarchy shared across the package."""


class BDHeightError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(BDHeightError, ValueError):
    """A constructor or operation received arguments outside its domain."""


class CapacityError(BDHeightError):
    """A computation was refused because it exceeds a configured size cap."""


class SimulationAbort(BDHeightError, RuntimeError):
    """A sampling run was stopped by the per-excursion step circuit breaker.

    Carries whatever was completed so a caller can report partial results.
    """

    def __init__(self, message, *, steps_taken=None, completed_heights=None):
        super().__init__(message)
        self.steps_taken = steps_taken
        self.completed_heights = completed_heights

"""Exception hierarchy shared by the library and the CLI."""


class StochFlowError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(StochFlowError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class InputError(ContractError):
    """A matrix, chain or spec file failed validation."""


class CapacityError(StochFlowError):
    """A dimension or period exceeds the configured cap."""

    def __init__(self, message, cap=None):
        super().__init__(message)
        self.cap = cap


class FlowStarvation(ContractError):
    """Some trajectory never accumulates positive flow.

    Raised when accumulation times do not exist; ``subset`` is the starving
    initial set (an :class:`~stochflow.flow.IndexSet`).
    """

    def __init__(self, message, subset=None):
        super().__init__(message)
        self.subset = subset


class InvariantViolation(StochFlowError, RuntimeError):
    """An internally guaranteed inequality or identity failed."""

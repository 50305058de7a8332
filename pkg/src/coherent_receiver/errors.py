"""Exception types raised across the package."""


class ReceiverError(Exception):
    """Base class for all package errors."""


class DomainError(ReceiverError, ValueError):
    """An argument lies outside the domain of the operation."""


class ContractError(ReceiverError, ValueError):
    """Arguments are individually valid but inconsistent with each other."""


class NoThresholdError(ReceiverError):
    """The likelihood ratio never crosses one, so no count threshold exists."""


class DegenerateEvidenceError(ReceiverError):
    """The observed outcome has zero probability under both hypotheses."""


class BudgetExceededError(ReceiverError):
    """Exact enumeration would exceed the branch budget; use Monte Carlo."""


class OptimizerError(ReceiverError):
    """An optimizer failed to converge. ``best`` holds the best point found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best

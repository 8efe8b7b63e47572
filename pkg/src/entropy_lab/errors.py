"""Exception hierarchy shared by every module."""


class EntropyLabError(Exception):
    """Base class for all library errors."""


class DomainError(EntropyLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class InsufficientDataError(EntropyLabError, ValueError):
    """A finite prefix is too short for the requested computation."""


class BudgetError(EntropyLabError):
    """An enumeration would exceed the configured cylinder budget."""

    def __init__(self, count, budget):
        self.count = count
        self.budget = budget
        super().__init__(f"enumeration of {count} cylinders exceeds budget {budget}")


class NotPrimitiveError(EntropyLabError):
    """The truncated transition matrix is not primitive (see check_primitive)."""


class InsufficientMassError(EntropyLabError):
    """The measure carries less mass than the cover target requires."""


class NotIntegrableError(EntropyLabError):
    """An integral against the measure diverges or cannot be certified."""


class ConfigError(EntropyLabError):
    """An experiment configuration does not resolve."""

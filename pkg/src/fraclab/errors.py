"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class BudgetExceeded(ValueError):
    """A requested precision or enumeration size is beyond the configured limit."""

    def __init__(self, what, requested, limit):
        super().__init__(f"{what}: requested {requested}, limit is {limit}")
        self.requested = requested
        self.limit = limit


class DegenerateInstance(ValueError):
    """Numerical input is too degenerate for the requested computation."""


class UnknownFractal(KeyError):
    pass

"""Shared exception types."""


class BudgetExceededError(RuntimeError):
    """An enumeration or sampling budget was exceeded.

    Carries the budget that would have been required so callers can decide
    whether to retry with a larger one.
    """

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class ValidationError(ValueError):
    """One or more preconditions on user-supplied parameters failed.

    ``problems`` lists every violated precondition, not just the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))

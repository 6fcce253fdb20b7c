"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """An enumeration or field construction would exceed the configured budget."""


class ConsistencyError(ArithmeticError):
    """An internal exact-arithmetic invariant failed (always a bug, never data)."""

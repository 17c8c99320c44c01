"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid arguments or configuration."""


class NumericError(ArithmeticError):
    """A numerical routine failed to converge or left its validity domain."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class InternalError(RuntimeError):
    """An internal invariant was violated (indicates a bug, not bad input)."""

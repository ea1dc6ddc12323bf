"""Exception types shared across the coding schemes."""


class ParameterError(ValueError):
    """A scheme parameter violates its declared constraints."""


class InsufficientAnswersError(ValueError):
    """Fewer responsive servers than the recovery threshold requires."""


class SingularMatrixError(ArithmeticError):
    """Gaussian elimination hit a zero pivot column."""

    def __init__(self, pivot: int):
        super().__init__(f"matrix is singular (no pivot in column {pivot})")
        self.pivot = pivot


class DecodingFailureError(Exception):
    """Error correction failed; the corruption budget was exceeded."""

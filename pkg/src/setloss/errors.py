"""Error types shared across the package.

Plain ``ValueError`` is raised for malformed arguments (wrong shapes,
out-of-range parameters).  The classes below cover the remaining failure
modes: inputs that are structurally fine but numerically unusable,
computations that fail to converge, and objects used outside their
contract.
"""


class DegenerateConfigurationError(ValueError):
    """Input is rank deficient or too ill conditioned to proceed.

    Carries a condition estimate of the offending matrix when one is
    available (``float("inf")`` for exactly singular input).
    """

    def __init__(self, message: str, condition: float | None = None):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class NumericalFailureError(RuntimeError):
    """An iterative kernel failed to converge or lost all accuracy."""


class InvalidStateError(RuntimeError):
    """An object does not satisfy the precondition of the requested call."""

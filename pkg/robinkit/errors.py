"""
Exception hierarchy for robinkit.
Every error carries a detail message and the exit code the CLI reports for it.
"""

from typing import Optional


class RobinKitError(Exception):
    """Base error; `exit_code` plays the role of a response status."""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidInputError(RobinKitError):
    exit_code = 2


class DimensionUnsupportedError(InvalidInputError):
    pass


class DuplicatePointError(InvalidInputError):
    pass


class PointOutsideDomainError(InvalidInputError):
    pass


class ChargeBalanceError(InvalidInputError):
    """Γ = ∅ requires the charge weights to sum to zero."""


class SingularityError(InvalidInputError):
    pass


class GeometryError(InvalidInputError):
    pass


class StructuralConditionError(InvalidInputError):
    def __init__(self, detail: str, condition: Optional[str] = None):
        if condition is not None:
            detail = f"condition {condition} violated: {detail}"
        super().__init__(detail)
        self.condition = condition


class NoFeasibleIterateError(InvalidInputError):
    pass


class NumericalFailureError(RobinKitError):
    exit_code = 3


class NonConvergenceError(NumericalFailureError):
    pass


class CompatibilityError(NumericalFailureError):
    pass


class DiscretizationError(NumericalFailureError):
    pass


class InequalityViolationError(RobinKitError):
    exit_code = 4

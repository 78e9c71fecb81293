"""Exception hierarchy.

The CLI maps these onto distinct exit codes, so keep the three broad
families (scenario/schema, model/stability, numerical) separate.
"""


class PointingBudgetError(Exception):
    """Base class for all package errors."""


class ScenarioError(PointingBudgetError):
    """Malformed or inconsistent scenario input (schema violations)."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ModelError(PointingBudgetError):
    """Structural model problem (dimensions, invalid parameters)."""


class DimensionError(ModelError):
    """Incompatible matrix or channel dimensions."""


class AlgebraicLoopError(ModelError):
    """Feedback interconnection is not well posed."""


class UnstableSystemError(ModelError):
    """Operation requires a stable system."""

    def __init__(self, message: str, eigenvalues=None):
        self.eigenvalues = eigenvalues
        super().__init__(message)


class RobustStabilityError(ModelError):
    """Instability found inside the uncertainty box; worst case unbounded."""

    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


class NumericalError(PointingBudgetError):
    """Numerical failure (singular solve, cross-check disagreement)."""

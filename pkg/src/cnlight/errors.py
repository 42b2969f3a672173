"""Exception hierarchy shared across the package.

Two broad families matter to callers (and to the CLI exit codes):
``ValidationError`` for bad inputs or violated preconditions, and
``NumericalError`` for failures that arise while computing.
"""

from __future__ import annotations


class CnLightError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CnLightError, ValueError):
    """Invalid input: bad parameters, violated preconditions."""


class DetuningConditionError(ValidationError):
    """The closed-form branch requires the solvable detuning condition."""


class SectorTooSmallError(ValidationError):
    """The requested excitation sector does not contain the needed states."""


class DegenerateSectorError(ValidationError):
    """All couplings vanish; the dressed-state branches are degenerate."""


class NonPureFieldError(ValidationError):
    """A passage requires the cavity field to be (numerically) pure."""


class DomainError(ValidationError):
    """An argument lies outside the domain of a closed-form expression."""


class NumericalError(CnLightError, RuntimeError):
    """A computation failed to reach its target accuracy or converge."""


class StepSizeUnderflowError(NumericalError):
    """The adaptive integrator was forced below the minimum step size."""


class MinimumNotFoundError(NumericalError):
    """No acceptable local minimum found in the exit-time search window."""


class TargetUnreachableError(NumericalError):
    """A parameter search ended above its target; best candidate attached.

    Attributes:
        best_value: parameter value achieving the smallest objective.
        best_objective: the smallest objective found.
    """

    def __init__(self, message: str, best_value: float, best_objective: float):
        super().__init__(message)
        self.best_value = best_value
        self.best_objective = best_objective

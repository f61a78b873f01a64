"""Exception hierarchy shared by all numerical modules.

Every error carries a ``payload`` dict so the command-line driver can emit a
machine-readable report without parsing messages.
"""

from __future__ import annotations

from typing import Any


class SzegoError(Exception):
    """Base class for all library errors."""

    kind = "error"

    def __init__(self, message: str, **payload: Any):
        super().__init__(message)
        self.payload = {"kind": self.kind, "message": message, **payload}


class DomainError(SzegoError, ValueError):
    kind = "domain"


class SingularityError(SzegoError, ZeroDivisionError):
    kind = "singularity"


class EvaluationError(SzegoError, FloatingPointError):
    kind = "evaluation"


class BranchError(SzegoError, ValueError):
    kind = "branch"


class ParameterProblemError(SzegoError, RuntimeError):
    """Schwarz-Christoffel parameter problem did not converge."""

    kind = "parameter_problem"


class InversionError(SzegoError, RuntimeError):
    kind = "inversion"


class NearBoundaryError(SzegoError, ValueError):
    """Interior evaluation requested too close to the boundary."""

    kind = "near_boundary"


class IllConditionedError(SzegoError, ArithmeticError):
    kind = "ill_conditioned"

"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class GaugeMEError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GaugeMEError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularPointError(DomainError):
    """Evaluation requested exactly at a removable singularity."""


class UnsupportedGaugeError(DomainError):
    """The operation has no implementation for the requested gauge."""


class NumericalError(GaugeMEError, ArithmeticError):
    """A numerical procedure failed to reach its target accuracy."""

    def __init__(self, message: str, error_estimate: float | None = None):
        super().__init__(message)
        self.error_estimate = error_estimate


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge."""


class NoSteadyStateError(GaugeMEError):
    """The master equation has no unique stationary state."""


class LindbladViolationError(GaugeMEError):
    """The dissipator has a negative eigenvalue; no valid unraveling exists."""


class ScenarioError(GaugeMEError, ValueError):
    """A scenario file could not be parsed or failed validation.

    Attributes:
        line: 1-based line number of the offending entry, if known.
        field: Name of the offending key, if known.
    """

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field

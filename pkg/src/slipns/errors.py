"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class SlipNSError(Exception):
    """Base class for all package errors."""


class DomainError(SlipNSError, ValueError):
    """Invalid domain or a field/array that does not match its domain."""


class ParityError(SlipNSError, ValueError):
    """A field carries the wrong wall-normal parity for its slot."""


class SolvabilityError(SlipNSError, ValueError):
    """Neumann problem with a right-hand side of non-zero mean."""


class PressureSolveError(SlipNSError, RuntimeError):
    """Pressure iteration ran out of budget before meeting its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BoundaryDataError(SlipNSError, RuntimeError):
    """Wall data of the pressure problem is not homogeneous."""


class CFLViolation(SlipNSError, ValueError):
    """Requested time step exceeds the advective or viscous limit."""


class PositivityLoss(SlipNSError, RuntimeError):
    """Density reached a non-positive value on the grid."""


class InvariantViolation(SlipNSError, RuntimeError):
    """A state invariant (divergence, wall trace) failed after a step."""


class InsufficientPoints(SlipNSError, ValueError):
    """Too few distinct viscosities to fit a rate."""


class ConfigError(SlipNSError, ValueError):
    """Configuration file failed schema validation."""

"""Exception types raised across the package."""


class OQWError(Exception):
    """Base class for all package errors."""


class WalkStructureError(OQWError, ValueError):
    """Transition matrices or states have inconsistent shapes or unknown nodes."""


class KrausCompletenessError(OQWError, ValueError):
    """The per-node completeness relation sum_i B^dag B = I fails."""

    def __init__(self, message, node=None, deviation=None):
        super().__init__(message)
        self.node = node
        self.deviation = deviation


class CapacityError(OQWError, ValueError):
    """A dense representation would exceed the supported dimension."""


class NotSimultaneouslyDiagonalizableError(OQWError, ValueError):
    """Left and right coins do not commute or are not normal."""


class ConvergenceError(OQWError, RuntimeError):
    """An iteration did not reach its tolerance within the step budget."""

    def __init__(self, message, residual=None, steps=None):
        super().__init__(message)
        self.residual = residual
        self.steps = steps


class InvariantViolation(OQWError, RuntimeError):
    """An internal invariant that valid inputs guarantee was broken."""

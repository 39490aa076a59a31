"""Exception hierarchy shared by every clockbound module."""


class ClockboundError(Exception):
    """Base class for all errors raised by this package."""


class NotHermitianError(ClockboundError, ValueError):
    pass


class NotPSDError(ClockboundError, ValueError):
    pass


class NotADensityOperatorError(ClockboundError, ValueError):
    pass


class NotADistributionError(ClockboundError, ValueError):
    pass


class DimensionMismatchError(ClockboundError, ValueError):
    pass


class BadSubsystemSpecError(ClockboundError, ValueError):
    pass


class NotPureError(ClockboundError, ValueError):
    pass


class NotProjectiveError(ClockboundError, ValueError):
    pass


class EmptyTruncationError(ClockboundError, ValueError):
    pass


class FillerOutsideSubspaceError(ClockboundError, ValueError):
    pass


class InvalidStrategyError(ClockboundError, ValueError):
    pass


class BadLengthError(ClockboundError, ValueError):
    pass


class QuadratureNotConvergedError(ClockboundError, RuntimeError):
    pass


class NoConvergenceError(ClockboundError, RuntimeError):
    """Raised only when a caller asks for strict convergence.

    Solvers normally return their best value with ``converged=False``.
    """


class ScenarioError(ClockboundError, ValueError):
    """Invalid scenario document. ``key`` is the dotted path of the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")

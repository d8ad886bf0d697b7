"""Exception types shared across the package."""


class LatentBookError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(LatentBookError, ValueError):
    """A model or estimator parameter is outside its admissible range."""


class CrossedDepositError(LatentBookError):
    """A limit order was placed at or through the midpoint."""


class WindowViolationError(LatentBookError):
    """A price outside the active deposition window was addressed."""


class DegenerateBookError(LatentBookError):
    """The book lost one or both sides; the replica cannot continue."""


class DropBudgetError(LatentBookError):
    """Recentring dropped more volume than the run-level budget allows."""


class InsufficientDataError(LatentBookError):
    """An estimator received fewer observations than it needs."""


class FitError(LatentBookError):
    """A nonlinear or power-law fit failed to converge or was refused."""


class DomainTooSmallError(LatentBookError):
    """The BVP solution is not flat at the far boundary; enlarge the domain."""


class BracketError(LatentBookError):
    """Root bracketing failed (no sign change over the search interval)."""


class ConfigError(LatentBookError):
    """An experiment configuration file is malformed.

    ``keys`` lists the offending entries so callers can emit a
    machine-readable report.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = list(keys)

"""Exception types shared across the package."""


class SkewlabError(Exception):
    """Base class for all package-specific errors."""


class InvalidPotentialError(SkewlabError):
    """Raised when a Fourier coefficient table cannot define a potential."""


class StripViolationError(SkewlabError):
    """Raised when a complex evaluation point leaves the analyticity strip."""


class CocycleNumericError(SkewlabError):
    """Raised when a transfer-matrix step encounters non-finite data.

    ``step`` is the 1-based index of the offending step.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class PreconditionError(SkewlabError):
    """Raised when a documented operation precondition fails at runtime."""


class ResolventSingularError(SkewlabError):
    """Raised when an energy is too close to a finite-volume eigenvalue.

    ``dist_estimate`` is a numerical estimate of the distance from the
    requested energy to the nearest eigenvalue of the restriction.
    """

    def __init__(self, message: str, dist_estimate: float | None = None):
        super().__init__(message)
        self.dist_estimate = dist_estimate


class FitUndefinedError(SkewlabError):
    """Raised when a regression has too few usable points."""


class OutOfRangeError(SkewlabError):
    """Raised when a query lies outside a precomputed table or interval."""


class ParametrizationFailedError(SkewlabError):
    """Raised when no isolated eigenvalue branch can be parametrized."""


class CoverageVacuousError(SkewlabError):
    """Raised when an interval certificate would be produced from no probes."""


class ThresholdUndefinedError(SkewlabError):
    """Raised when a deviation threshold would be non-positive."""


class ConfigError(SkewlabError):
    """Raised for unknown keys, missing required keys, or bad value types."""


class IncompleteRecordError(SkewlabError):
    """Raised when a stored record lacks fields a comparison requires."""

"""Exception types raised across the package."""


class WatermarkError(Exception):
    """Base class for all package errors."""


class BitRangeError(WatermarkError, ValueError):
    """A value does not fit in the requested bit width."""


class PartitionError(WatermarkError, ValueError):
    """A bit string cannot be split into equal groups."""


class TamperError(WatermarkError):
    """The watermark carried by a problem is corrupted or inconsistent with the key."""


class InfeasibleError(WatermarkError):
    """No point satisfying the constraints was found.

    ``best_violation`` is the smallest maximum constraint violation seen
    across all starts.
    """

    def __init__(self, message, best_violation=float("inf")):
        super().__init__(message)
        self.best_violation = best_violation


class UndefinedNormError(WatermarkError, ValueError):
    """Normalized correlation against a zero reference vector."""


class DetectionError(WatermarkError):
    """One of the solves inside detection failed."""

    def __init__(self, message, problem_name):
        super().__init__(message)
        self.problem_name = problem_name


class ConfigError(WatermarkError, ValueError):
    """Invalid experiment configuration."""

"""Exception types raised across the package."""


class CSBPError(Exception):
    """Base class for all package errors."""


class UnsupportedDegreeError(CSBPError, ValueError):
    pass


class MeshTooSmallError(CSBPError, ValueError):
    pass


class IterationLimitError(CSBPError, RuntimeError):
    """Power iteration did not converge; ``last_iterate`` holds the final estimate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class InsufficientDataError(CSBPError, ValueError):
    pass


class InvalidScaleError(CSBPError, ValueError):
    pass


class DimensionError(CSBPError, ValueError):
    pass


class PostBreakingError(CSBPError, ValueError):
    """Requested time is at or past the breaking time of the exact solution."""


class DivergenceError(CSBPError, RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InvalidCoefficientError(CSBPError, ValueError):
    pass


class BlowUpDomainError(CSBPError, ValueError):
    def __init__(self, message, t_star=None):
        super().__init__(message)
        self.t_star = t_star


class OracleRangeError(CSBPError, RuntimeError):
    pass


class EnvelopeNotApplicableError(CSBPError, ValueError):
    def __init__(self, message, t_star=None):
        super().__init__(message)
        self.t_star = t_star


class ConfigError(CSBPError, ValueError):
    pass

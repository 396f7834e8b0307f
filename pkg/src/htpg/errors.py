"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedAlphaError(ParameterError):
    """Raised for closed-form queries outside the Cauchy (alpha=1) and
    Gaussian (alpha=2) members; callers must fall back to sampling-only
    workflows for other tail indices."""


class ScheduleError(ParameterError):
    """A step-size schedule produced a value the update rule cannot accept."""


class EnvUsageError(RuntimeError):
    """An environment was driven past a terminal state."""


class DivergenceError(RuntimeError):
    """Iterates left the representable range (NaN or infinity)."""

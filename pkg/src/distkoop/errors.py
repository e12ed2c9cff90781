"""Exception types shared across the package."""


class DistkoopError(Exception):
    """Base class for all package errors."""


class ConfigError(DistkoopError):
    """Invalid or missing configuration value. Carries the offending key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class DataFormatError(DistkoopError):
    """Malformed on-disk data (measures, manifests, frames, operators)."""


class EvaluationError(DistkoopError):
    """An observable or state map produced an invalid value."""


class IntegrationError(DistkoopError):
    """Stochastic integration produced a non-finite state."""


class DegenerateDataError(DistkoopError):
    """Snapshot data carries no usable signal (e.g. all-zero inputs)."""


class NumericalError(DistkoopError):
    """A numerical routine failed or violated its accuracy contract."""


class IllConditionedGramError(DistkoopError):
    """Gram matrix too ill-conditioned to invert reliably."""

    def __init__(self, condition_estimate):
        self.condition_estimate = float(condition_estimate)
        super().__init__(
            f"Gram matrix is numerically singular (condition estimate "
            f"{self.condition_estimate:.3e}); use fewer or better-spread observables"
        )

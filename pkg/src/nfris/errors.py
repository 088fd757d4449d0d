"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


class NumericalError(RuntimeError):
    """A linear-algebra step failed (singular or indefinite matrix)."""


class InfeasibleError(RuntimeError):
    """An estimator cannot be formed for the given dimensions."""

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3e})")
        self.achieved = achieved


class UnhedgeableIntervalError(ValueError):
    """No usable option strikes cover the liquidity interval."""


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


class TruncationWarning(RuntimeWarning):
    """An integral was truncated or resolved with error above the requested tolerance."""

"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario or component configuration violates a precondition."""


class NumericsError(RuntimeError):
    """A numerical computation aborted (NaN/overflow, iteration divergence)."""

"""Shared exception types."""


class ConfigError(ValueError):
    """A scenario or CLI configuration is invalid."""


class CostGuardError(RuntimeError):
    """An operation was requested above its declared size limit."""

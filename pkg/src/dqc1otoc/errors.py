"""Exception types shared across the package."""


class SizeCapError(ValueError):
    """Raised when a request exceeds a dense-simulation size cap."""


class ConfigError(ValueError):
    """Raised for an invalid run configuration."""

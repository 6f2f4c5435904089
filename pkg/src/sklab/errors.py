class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedError(NotImplementedError):
    """The requested parameter regime is not supported."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""

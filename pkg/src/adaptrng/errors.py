"""Exception hierarchy shared by all modules."""


class AdaptRngError(Exception):
    """Base class."""


class DomainError(AdaptRngError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(AdaptRngError, ValueError):
    """Invalid or inconsistent configuration."""


class InputFormatError(AdaptRngError, ValueError):
    """Malformed input stream or file."""


class StateError(AdaptRngError, RuntimeError):
    """Operation not permitted in the object's current state."""


class SeedError(AdaptRngError, ValueError):
    """Seed material that would leave a generator in a degenerate state."""

"""Exception hierarchy shared by all modules."""


class SlkError(Exception):
    """Base class for every error raised by the package."""


class ParseError(SlkError, ValueError):
    pass


class ShapeError(SlkError, ValueError):
    pass


class ValidationError(SlkError, ValueError):
    pass


class BoundsError(SlkError, ValueError):
    pass


class DomainError(SlkError, ValueError):
    pass


class UsageError(SlkError, ValueError):
    pass


class ConfigError(SlkError, ValueError):
    pass


class DegenerateBandwidthError(ConfigError):
    """Raised when the estimated kernel bandwidth collapses to zero."""


class EmptyClusterError(SlkError, RuntimeError):
    """A cluster carries no assignment mass."""

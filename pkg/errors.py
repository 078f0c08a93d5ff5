class NlshareError(Exception):
    """Base class for every error raised by nlshare."""


class DomainError(NlshareError, ValueError):
    """A parameter lies outside its admissible domain."""


class DimensionError(DomainError):
    pass


class InfeasibleRange(DomainError):
    """A threshold has no finite value for the requested parameters."""

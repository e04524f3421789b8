"""Exception types raised across the package."""


class HetNetError(Exception):
    """Base class for all package errors."""


class FullRank(HetNetError):
    """The input vectors already span the whole space; no complement exists."""


class NotPositiveDefinite(HetNetError):
    pass


class DimensionMismatch(HetNetError, ValueError):
    pass


class InvalidParameter(HetNetError, ValueError):
    """A schedule parameter (c, d, ...) sits on an excluded value."""


class UnsupportedTopology(HetNetError, ValueError):
    pass


class DegenerateChannel(HetNetError):
    """Receiver construction hit a rank-deficient channel (probability-zero event)."""


class FactorizationMismatch(HetNetError):
    """Direct P.H.V and the factored effective channel disagree."""


class ConfigError(HetNetError, ValueError):
    pass

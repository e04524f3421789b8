"""Hybrid TIM-NOMA and blind interference alignment for macro/femto heterogeneous networks."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateChannel,
    DimensionMismatch,
    FactorizationMismatch,
    FullRank,
    HetNetError,
    InvalidParameter,
    NotPositiveDefinite,
    UnsupportedTopology,
)
from .linalg import kron, log_det_hermitian, orthonormal_complement  # noqa: E402
from .network import (  # noqa: E402
    ChannelSet,
    PowerConfig,
    Topology,
    draw_channels,
    example_power,
    example_topology,
    lift_channel,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DegenerateChannel",
    "DimensionMismatch",
    "FactorizationMismatch",
    "FullRank",
    "HetNetError",
    "InvalidParameter",
    "NotPositiveDefinite",
    "UnsupportedTopology",
    "kron",
    "log_det_hermitian",
    "orthonormal_complement",
    "ChannelSet",
    "PowerConfig",
    "Topology",
    "draw_channels",
    "example_power",
    "example_topology",
    "lift_channel",
]

"""Exception hierarchy shared by all rdars modules."""


class RdarsError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RdarsError, ValueError):
    """Invalid parameter, malformed config, or inconsistent dimensions."""


class InvalidGeometryError(ConfigError):
    """Node positions that produce a non-positive link distance."""


class DegenerateChannelError(RdarsError, ValueError):
    """A channel that is identically zero where a direction is required."""


class InfeasibleError(RdarsError):
    """The communication QoS constraint cannot be met."""


class SearchCapError(RdarsError):
    """An exhaustive enumeration would exceed its configured size cap."""

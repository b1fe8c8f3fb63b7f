"""Exception types raised by the log and its tooling."""


class XorLogError(Exception):
    """Base class for all package errors."""


class ConfigError(XorLogError, ValueError):
    """Invalid construction or run configuration."""


class ItemTooLarge(XorLogError, ValueError):
    """Item does not fit in the usable item bits of a slot."""


class CapacityExhausted(XorLogError):
    """A fetched slot index fell outside the fixed slot array."""


class TooManyHandles(XorLogError):
    """More handles requested than the log's writer bound allows."""


class ConfigTooLarge(ConfigError):
    """Exploration configuration exceeds the tractable bounds."""

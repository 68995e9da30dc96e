class ProxmanipError(Exception):
    """Base class for package errors."""


class ConfigError(ProxmanipError):
    """Invalid or inconsistent configuration."""


class UnreachableError(ConfigError):
    """No flexion of the preset profile puts both fingertips on the object."""


class RejectedActionError(ProxmanipError, ValueError):
    """A motor command outside the joint travel was passed to the simulator."""

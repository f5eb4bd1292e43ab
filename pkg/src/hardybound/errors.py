"""Exception hierarchy shared by every module."""


class HardyBoundError(Exception):
    """Base class for all errors raised by :mod:`hardybound`."""


class DomainError(HardyBoundError, ValueError):
    """A point or set violates the domain requirements (outside Omega, unbounded, ...)."""


class ParameterError(HardyBoundError, ValueError):
    """A numerical parameter is out of its admissible range."""


class ContractError(HardyBoundError, ValueError):
    """Arguments are individually valid but inconsistent with each other."""


class ConfigError(ParameterError):
    """A run configuration failed validation."""


class OutputError(HardyBoundError, OSError):
    """Reading or writing a result or witness file failed."""

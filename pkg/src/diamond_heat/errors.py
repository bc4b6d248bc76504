"""Exception and warning types raised by diamond_heat."""


class DiamondHeatError(Exception):
    """Base class for all library errors."""


class DomainError(DiamondHeatError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class LevelRangeError(DiamondHeatError, IndexError):
    """A level index exceeds the depth supported by a parameter sequence."""


class CapacityError(DiamondHeatError, OverflowError):
    """A computation would exceed a fixed integer width or memory budget."""


class InsufficientDepthError(DiamondHeatError, RuntimeError):
    """The limit kernel could not be certified within the requested tolerance.

    Attributes
    ----------
    bound : float
        The truncation bound actually achieved at the configured depth.
    """

    def __init__(self, message, bound):
        super().__init__(message)
        self.bound = bound


class ConfigError(DiamondHeatError, ValueError):
    """A configuration document or address string could not be parsed."""


class PrecisionWarning(UserWarning):
    """Requested tolerance is below what double precision can deliver."""

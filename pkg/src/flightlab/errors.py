"""Exception types shared across the package."""


class FlightLabError(Exception):
    pass


class ConfigError(FlightLabError, ValueError):
    pass


class RangeError(FlightLabError, ValueError):
    """Query point or parameter outside the supported range."""


class SizeError(FlightLabError, ValueError):
    """Requested object would be too large (depth, iterations, resolution)."""


class DomainError(FlightLabError, ValueError):
    pass


class UnsupportedOperationError(FlightLabError, NotImplementedError):
    pass


class InsufficientDataError(FlightLabError, ValueError):
    pass


class UsageError(FlightLabError, ValueError):
    pass

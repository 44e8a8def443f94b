"""Exception types raised across the package."""


class HodgeflowError(Exception):
    """Base class for all package errors."""


class BandwidthExceeded(HodgeflowError):
    pass


class GridMismatch(HodgeflowError):
    pass


class RankMismatch(HodgeflowError):
    pass


class NegativeHeatTime(HodgeflowError):
    pass


class ZeroField(HodgeflowError):
    pass


class StepTooLarge(HodgeflowError):
    pass


class ScheduleTooCoarse(HodgeflowError):
    pass


class BackendUnsupported(HodgeflowError):
    pass


class EmptySet(HodgeflowError):
    pass


class CurveTooFlat(HodgeflowError):
    pass


class QuadratureDiverged(HodgeflowError):
    pass


class FitRangeTooSmall(HodgeflowError):
    pass


class CFLViolation(HodgeflowError):
    """Raised when a time step would violate the advective CFL bound.

    ``partial`` carries the trajectory accumulated before the violation, if any.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigParseError(HodgeflowError):
    """Malformed run configuration; ``line`` and ``field`` locate the problem."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.field = field


class FormatError(HodgeflowError):
    """Bad OHFL header or truncated payload."""


class IoError(HodgeflowError):
    """A report or field file could not be written or read."""

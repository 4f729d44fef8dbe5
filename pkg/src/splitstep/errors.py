"""Exception types raised by splitstep."""


class SplitstepError(Exception):
    """Base class for all library errors."""


class InvalidMeshError(SplitstepError, ValueError):
    pass


class DimensionError(SplitstepError, ValueError):
    pass


class InvalidExponentError(SplitstepError, ValueError):
    pass


class InvalidWeightError(SplitstepError, ValueError):
    pass


class ResolutionError(SplitstepError, ValueError):
    pass


class PartitionError(SplitstepError, ValueError):
    pass


class TimeRangeError(SplitstepError, ValueError):
    pass


class SpecMismatchError(SplitstepError, ValueError):
    pass


class DataError(SplitstepError, ValueError):
    pass


class DegenerateDataError(DataError):
    pass


class ConfigError(SplitstepError, ValueError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class SolverFailure(SplitstepError, RuntimeError):
    """Newton iteration did not reach the residual tolerance."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats


class NumericalBreakdown(SolverFailure):
    """A NaN or Inf appeared during a solve."""


class StepFailure(SolverFailure):
    """A time step failed; carries the step index and the partial trajectory."""

    def __init__(self, message, step, subdomain=None, stats=None, trajectory=None):
        super().__init__(message, stats)
        self.step = step
        self.subdomain = subdomain
        self.trajectory = trajectory

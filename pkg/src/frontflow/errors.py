"""Exception types shared across the package."""


class FrontflowError(Exception):
    """Base class for all frontflow errors."""


class OutOfDomainError(FrontflowError):
    """A point violates the feasible box; carries the offending coordinate."""

    def __init__(self, index, value, lo, hi):
        self.index = int(index)
        self.value = float(value)
        super().__init__(
            f"coordinate {index} = {value!r} outside [{lo!r}, {hi!r}]"
        )


class UnsupportedProblemError(FrontflowError):
    """Requested benchmark problem is not registered."""


class NumericError(FrontflowError):
    """Non-finite values where finite numbers are required."""


class DegeneratePopulationError(FrontflowError):
    """Pairwise potentials need at least two particles."""


class UnsupportedDimensionError(FrontflowError):
    """Operation not available for this objective count."""


class ConfigError(FrontflowError):
    """Malformed or incomplete run configuration."""


class RunAborted(FrontflowError):
    """A dynamics run failed mid-way; carries the epoch and partial record."""

    def __init__(self, epoch, record, cause):
        self.epoch = int(epoch)
        self.record = record
        self.cause = cause
        super().__init__(f"run aborted at epoch {epoch}: {cause}")

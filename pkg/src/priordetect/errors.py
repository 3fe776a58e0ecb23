"""Exception hierarchy."""


class PriorDetectError(Exception):
    """Base class for all library errors."""


class UndefinedPointError(PriorDetectError, ValueError):
    """Both class-conditional densities vanish at the queried point."""


class ConstructionError(PriorDetectError, ValueError):
    """A density family or hypothesis instance could not be built."""


class NumericError(PriorDetectError, ArithmeticError):
    """A numerical routine failed to reach its requested tolerance.

    ``achieved`` carries the tolerance that was actually reached, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateSampleError(PriorDetectError, ValueError):
    """A sample has zero mixture likelihood."""


class FitError(PriorDetectError, ValueError):
    """A regression could not be performed on the supplied data."""

"""Exception hierarchy shared by every plspower module."""


class PlsPowerError(Exception):
    """Base class for all library errors."""


class InvalidInput(PlsPowerError, ValueError):
    """Input failed validation (shape, range, finiteness)."""


class ShapeMismatch(InvalidInput):
    pass


class TooFewRows(InvalidInput):
    pass


class ZeroVariance(InvalidInput):
    """A column has zero variance and cannot be autoscaled."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"column {column} has zero variance")


class DegenerateClasses(InvalidInput):
    pass


class InvalidEpsilon(InvalidInput):
    pass


class TooFewPerClass(InvalidInput):
    pass


class MalformedCsv(InvalidInput):
    pass


class MissingLabelColumn(InvalidInput):
    pass


class MoreThanTwoClasses(InvalidInput):
    pass


class RankDeficient(PlsPowerError):
    pass


class RankExceeded(PlsPowerError):
    pass


class ComponentCollapse(PlsPowerError):
    """The covariance signal is exhausted before the requested component count."""


class Singular(PlsPowerError):
    pass


class NotPSD(PlsPowerError):
    pass


class NoPredictiveDirection(PlsPowerError):
    pass


class PostTransformInconsistent(PlsPowerError):
    pass


class SimulationFailed(PlsPowerError):
    pass


class PowerRunFailed(PlsPowerError):
    pass


class RVUndefined(PlsPowerError):
    pass


class ProcrustesUndefined(PlsPowerError):
    pass

"""Exception hierarchy shared across the package."""


class CifTestError(Exception):
    """Base class for all errors raised by this package."""


class EmptySample(CifTestError):
    """A sample contains no subjects."""


class NonPositiveDuration(CifTestError):
    """A subject's exit time is not strictly larger than its entry time."""


class TiesPresent(CifTestError):
    """Tied exit times found while the tie policy forbids them."""


class EmptyRiskSet(CifTestError):
    """The risk set of a sample is empty at the right interval endpoint."""


class GridMismatch(CifTestError):
    """A grid does not match the event times (or another grid) it is used with."""


class InadmissibleWeight(CifTestError):
    """The weight function is not allowed for the requested computation."""


class DegenerateVariance(CifTestError):
    """Variance estimate is (numerically) zero; studentization is undefined."""


class DegenerateMoments(CifTestError):
    """Moment estimates too close to zero for a chi-square approximation."""


class MultiplierCountMismatch(CifTestError):
    """Number of wild-bootstrap multipliers does not match the event count."""


class ScenarioError(CifTestError):
    """Invalid simulation scenario configuration; message names the field."""


class ParseError(CifTestError):
    """A dataset row failed validation.

    Carries the 1-based line number of the offending row.
    """

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownColumn(CifTestError):
    """A mapped column name is missing from the input file."""


class MoreThanTwoGroups(CifTestError):
    """The dataset does not reduce to exactly two groups after filtering."""

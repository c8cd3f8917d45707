"""Exception hierarchy.

The CLI maps these to exit codes: ``DataError`` -> 2, ``SolverError`` -> 3,
``MissingArtifact`` -> 4.
"""


class QrloadError(Exception):
    """Base class for all errors raised by this package."""


class DataError(QrloadError):
    """Invalid, inconsistent, or insufficient input data."""


class MalformedRow(DataError):
    pass


class NonPositiveLoad(DataError):
    pass


class OutOfOrderTimestamps(DataError):
    pass


class DuplicateTimestamp(DataError):
    """A timestamp occurs more than twice; a single doubled hour is the
    only duplication the clock-change repair can absorb."""


class UnrepairableGap(DataError):
    pass


class InsufficientHistory(DataError):
    """History too short for the requested window.

    Carries ``available_hours`` so a caller can decide to proceed with a
    documented shorter window.
    """

    def __init__(self, message, available_hours=None):
        super().__init__(message)
        self.available_hours = available_hours


class MissingTemperature(DataError):
    pass


class DegenerateDesign(DataError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class WindowTooLong(DataError):
    pass


class TooFewSamples(DataError):
    pass


class InvalidTau(DataError, ValueError):
    pass


class UnknownTau(DataError, ValueError):
    pass


class WindowBeforeTrainingEnd(DataError):
    pass


class MissingRealized(DataError):
    pass


class NonPositiveBenchmark(DataError):
    pass


class SolverError(QrloadError):
    """Numerical fitting failed."""


class SolverDiverged(SolverError):
    pass


class RankDeficient(SolverError):
    pass


class MissingArtifact(QrloadError):
    """A required model or forecast file does not exist."""

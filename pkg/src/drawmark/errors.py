"""Typed errors shared across the toolkit.

Every validation failure maps to one of these classes so callers can
distinguish bad input data (exit code 2 in the CLI) from runtime faults.
"""


class DrawmarkError(Exception):
    """Base class for all toolkit errors."""


# --- session model / IO ---------------------------------------------------

class MissingFileError(DrawmarkError):
    pass


class SchemaViolationError(DrawmarkError):
    pass


class InvariantViolationError(DrawmarkError):
    pass


class IoError(DrawmarkError):
    pass


# --- kinematics -----------------------------------------------------------

class TooFewSamplesError(DrawmarkError):
    pass


class EmptyTrainingError(DrawmarkError):
    pass


# --- dtw ------------------------------------------------------------------

class TooFewPointsError(DrawmarkError):
    pass


# --- linear models / statistics -------------------------------------------

class SingleClassError(DrawmarkError):
    pass


class DimensionMismatchError(DrawmarkError):
    pass


class DegenerateVarianceError(DrawmarkError):
    pass


class EmptySampleError(DrawmarkError):
    pass


# --- spectral / spatial filtering -----------------------------------------

class BandOutOfRangeError(DrawmarkError):
    pass


class EigenFailureError(DrawmarkError):
    pass


class KTooLargeError(DrawmarkError):
    pass


class DegenerateTargetError(DrawmarkError):
    pass


class SingularProjectionError(DrawmarkError):
    pass


class SegmentTooLongError(DrawmarkError):
    pass


# --- feature selection ----------------------------------------------------

class TooFewTrialsError(DrawmarkError):
    pass


class KInvalidError(DrawmarkError):
    pass


# --- evaluation -----------------------------------------------------------

class SingleConditionError(DrawmarkError):
    pass


class EmptyTrainError(DrawmarkError):
    pass


class MissingEpochsError(DrawmarkError):
    pass


class UnreachableCombinationError(DrawmarkError):
    pass


# --- synthetic data -------------------------------------------------------

class InvalidSpecError(DrawmarkError):
    pass


class TooLargeError(DrawmarkError):
    pass

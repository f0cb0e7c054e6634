"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit with 1, bad or
missing data with 2, numeric failures with 3. Everything else is a bug
and propagates as a plain traceback.
"""


class TrackRecError(Exception):
    """Base class for errors raised by this package."""


class UsageError(TrackRecError):
    """Bad command-line arguments, unknown config keys, or unknown names."""


class DataError(TrackRecError):
    """Malformed, inconsistent, or missing input data."""


class FormatError(DataError):
    """A track file failed magic, version, or size validation."""


class LayoutError(DataError):
    """An external array dump has an unknown or inconsistent layout."""


class DataQualityError(DataError):
    """Input data contains NaN or otherwise unusable values."""


class EmptyDatasetError(DataError):
    """An operation produced or received a dataset with no entries."""


class InsufficientPointsError(DataError):
    """More points were requested than a track set contains."""


class SceneSpecError(DataError):
    """A synthetic scene spec violates its bounds, e.g. the object would
    leave the safe region of the frame."""


class NumericError(TrackRecError):
    """A numeric failure (non-finite loss or gradient) aborted a run."""

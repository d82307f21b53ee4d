"""Exception types shared across the toolkit.

DataError subclasses describe content problems (bad formats, inconsistent
inputs) and map to CLI exit code 2; plain OSError is left to the standard
library and maps to exit code 3.
"""


class FlipforgeError(Exception):
    """Base class for all toolkit-specific errors."""


class DataError(FlipforgeError):
    """Input content violates a format or consistency contract."""


class EmptySequenceError(DataError):
    """A sequence directory or object contains no frames."""


class NonContiguousFramesError(DataError):
    """Frame indices are not exactly 0..T-1."""


class MixedDimensionsError(DataError):
    """Frames in one sequence disagree on width or height."""


class UnsupportedBitDepthError(DataError):
    """A frame file is not 16-bit single-channel grayscale."""


class DuplicateEventError(DataError):
    """An annotation set contains two identical (t, x, y) events."""


class EmptyCropBankError(DataError):
    """No usable annotation was available to build crop patches from."""


class HeatmapFormatError(DataError):
    """A heatmap file has a bad magic, version, or payload size."""


class ConfigError(DataError):
    """A configuration file is malformed or carries unknown keys."""

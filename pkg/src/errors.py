"""Exception types shared by the detector modules.

The CLI maps each family to an exit code: usage errors to 2, OS-level I/O
failures (plain ``OSError``) to 3 and data/format errors to 4.
"""


class DetectorError(Exception):
    """Base class for every error raised on purpose by this package."""


class UsageError(DetectorError):
    """A caller broke a precondition (bad argument, empty batch, ...)."""


class DataFormatError(DetectorError):
    """An input file (corpus CSV, grid file, corpus spec) is malformed."""


class ModelFormatError(DataFormatError):
    """A model file could not be decoded."""


class TruncatedModelError(ModelFormatError):
    pass


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class ChecksumMismatchError(ModelFormatError):
    pass


class ShapeMismatchError(ModelFormatError):
    pass


class InputShapeError(UsageError):
    """An index sequence does not match the model's sequence length or vocabulary."""

"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class FragilemarkError(Exception):
    """Base class for all errors raised by this package."""


class ImageIOError(FragilemarkError, OSError):
    """A file could not be read or written."""


class DecodeError(FragilemarkError, ValueError):
    """Corrupt file, unsupported format or unsupported bit depth."""


class EncodeError(FragilemarkError, ValueError):
    pass


class DimensionMismatch(FragilemarkError, ValueError):
    pass


class ImageTooSmall(FragilemarkError, ValueError):
    pass


class CapacityError(FragilemarkError, ValueError):
    pass


class MissingAux(FragilemarkError, ValueError):
    """A morph manipulation was requested without partner image/landmarks."""


class CodecUnavailable(FragilemarkError, RuntimeError):
    pass


class DegenerateInput(FragilemarkError, ValueError):
    pass


class LandmarkMismatch(FragilemarkError, ValueError):
    pass


class DegenerateData(FragilemarkError, ValueError):
    pass


class NonFiniteFeature(FragilemarkError, ValueError):
    pass


class LengthMismatch(FragilemarkError, ValueError):
    pass


class EmptyTestSet(FragilemarkError, ValueError):
    pass

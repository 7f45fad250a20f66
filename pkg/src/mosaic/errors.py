"""Exception types raised by the mosaicing library."""


class MosaicError(Exception):
    """Base class for all library errors."""


class SingularHomography(MosaicError, ValueError):
    pass


class PatchOutOfBounds(MosaicError, ValueError):
    pass


class ImageTooSmall(MosaicError, ValueError):
    pass


class OutOfBounds(MosaicError, ValueError):
    pass


class RegionOutOfBounds(MosaicError, ValueError):
    pass


class TooManyLevels(MosaicError, ValueError):
    pass


class DimensionMismatch(MosaicError, ValueError):
    pass


class InsufficientMatches(MosaicError):
    pass


class NoConsensus(MosaicError):
    pass


class ZeroKeypoints(MosaicError, ValueError):
    pass


class SpecInvalid(MosaicError, ValueError):
    pass


class RegistrationFailed(MosaicError):
    """A frame pair could not be registered; carries the partial report."""

    def __init__(self, message, report=None, pair=None):
        super().__init__(message)
        self.report = report
        self.pair = pair


class DegenerateSource(UserWarning):
    """A source channel had (near) zero spread during color alignment."""

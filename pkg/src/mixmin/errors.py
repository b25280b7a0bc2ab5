"""Exception hierarchy shared across the package."""


class MixMinError(ValueError):
    """Base class for invalid inputs and data problems."""


class SimplexError(MixMinError):
    """A vector is not a valid point on the probability simplex."""


class ZeroProbabilityError(MixMinError):
    """A mixture assigns zero probability to an observed sample."""


class DataFormatError(MixMinError):
    """A file on disk does not match its declared layout."""

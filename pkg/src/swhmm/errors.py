class SwhmmError(Exception):
    """Base class for library errors."""


class InvalidModelError(SwhmmError, ValueError):
    pass


class NoUniqueStationaryError(SwhmmError, ValueError):
    """The Markov chain has no unique stationary distribution."""


class DegenerateObservationError(SwhmmError, ValueError):
    """An observed bit has zero probability under the current belief."""


class EnumerationLimitError(SwhmmError, ValueError):
    """Exact enumeration was requested past its supported size."""


class ConstructionError(SwhmmError, ValueError):
    """A degree distribution cannot be realized at the requested size."""


class DimensionError(SwhmmError, ValueError):
    """Array shapes disagree with the code or frame layout."""


class FormatError(SwhmmError, ValueError):
    """A file on disk is malformed or has the wrong magic/version."""

"""Exception hierarchy.

Everything that signals a statistical degeneracy (as opposed to bad input
files or misuse of the API) derives from :class:`DegeneracyError`, so callers
such as the command line front end can map a whole family to one exit code.
"""


class TarbootError(Exception):
    """Base class for all errors raised by this package."""


class DegeneracyError(TarbootError):
    """The data do not support the requested computation."""


class InsufficientData(DegeneracyError):
    pass


class SingularDesign(DegeneracyError):
    """The AR regression cross-product matrix is (numerically) singular."""


class DegenerateGrid(DegeneracyError):
    """Fewer than two distinct threshold candidates survive the quantile bounds."""


class SingularAtThreshold(DegeneracyError):
    """The Schur complement of the information matrix is ill conditioned at r."""

    def __init__(self, message, threshold=None, condition=None):
        super().__init__(message)
        self.threshold = threshold
        self.condition = condition


class AllThresholdsSingular(DegeneracyError):
    pass


class DegenerateResiduals(DegeneracyError):
    pass


class TooManyFailures(DegeneracyError):
    def __init__(self, message, failures=0, total=0):
        super().__init__(message)
        self.failures = failures
        self.total = total


class ConfigError(TarbootError):
    """Invalid experiment configuration. ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class SeriesFileError(TarbootError):
    """A series file could not be read or parsed."""

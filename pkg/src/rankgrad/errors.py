"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`RankGradError`; the CLI maps each subclass to its own exit code.
"""


class RankGradError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(RankGradError, ValueError):
    """Malformed numeric input: wrong length, non-finite entries, bad parameters."""

    exit_code = 3


class NonPositiveError(InputError):
    """A vector that must be strictly positive is not."""

    exit_code = 4


class DegenerateInputError(RankGradError, ValueError):
    """The requested quantity is undefined for this input (e.g. constant response)."""

    exit_code = 5


class SingularityError(RankGradError, ValueError):
    """A correlation matrix is numerically singular.

    Attributes
    ----------
    directions : ndarray
        Eigenvectors (as columns) whose eigenvalues fell below the threshold.
    """

    exit_code = 6

    def __init__(self, message, directions=None):
        super().__init__(message)
        self.directions = directions


class TrainingError(RankGradError, RuntimeError):
    """Model fitting failed (rank deficiency, non-finite loss)."""

    exit_code = 7


class DataError(RankGradError, ValueError):
    """Dataset ingestion or schema problems."""

    exit_code = 8


class ConfigError(RankGradError, ValueError):
    """Invalid run configuration."""

    exit_code = 9


class OutputError(RankGradError, OSError):
    """A report file could not be written."""

    exit_code = 10

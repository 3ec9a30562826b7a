class ScopeSyncError(Exception):
    """Base class for every error raised by ScopeSync."""


class InvalidArgumentError(ScopeSyncError, ValueError):
    """A precondition on an argument was violated."""


class DegenerateFitError(ScopeSyncError):
    """The sinusoid design matrix is rank deficient."""


class LowConfidenceError(ScopeSyncError):
    """An estimate exists but is too weak to be trusted."""


class UndefinedCorrelationError(ScopeSyncError):
    """Pearson correlation of a zero-variance input."""


class FormatError(ScopeSyncError):
    """Malformed on-disk data.

    Parameters
    ----------
    message : str
    path : str or Path, optional
        File holding the offending data.
    line : int, optional
        1-based line number in ``path``; the CSV header is line 1.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ''
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ': '
        super().__init__(where + message)


class ConflictError(ScopeSyncError):
    """The requested write collides with existing data or a held lock."""


class ConsistencyError(ScopeSyncError):
    """The dataset index and the episodes on disk disagree."""

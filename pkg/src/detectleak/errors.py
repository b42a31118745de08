"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
anything else -> 3.
"""


class DetectLeakError(Exception):
    """Base class for all toolkit errors."""


class UsageError(DetectLeakError):
    """Caller misuse: bad arguments, mismatched parameters, invalid state."""


class DataError(DetectLeakError):
    """Input data is unreadable, corrupt, or internally inconsistent."""


class DuplicateSubmission(UsageError):
    """An annotator re-submitted a label for a pair they already labeled."""

    def __init__(self, message: str, existing):
        super().__init__(message)
        self.existing = existing

"""Exception roots shared by every package.

The CLI maps ``UsageError`` to exit code 2 and ``NumericFailure`` to 3.
"""


class VidynError(Exception):
    """Base class for all project errors."""

    exit_code = 1


class UsageError(VidynError):
    """A precondition on inputs or call order was violated."""

    exit_code = 2


class NumericFailure(VidynError):
    """A computation produced non-finite values or could not proceed."""

    exit_code = 3

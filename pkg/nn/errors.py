from config.errors import UsageError


class ShapeError(UsageError, ValueError):
    """Array dimensions do not match the declared layer sizes."""

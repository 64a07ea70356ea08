from .settings import settings
from .errors import VidynError, UsageError, NumericFailure

__all__ = ["settings", "VidynError", "UsageError", "NumericFailure"]

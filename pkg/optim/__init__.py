from .errors import PoisonedGradient, ScheduleRangeError
from .schedule import LrSchedule, cosine_lr
from .adam import AdamState, adam_step, clip_by_global_norm

__all__ = [
    "PoisonedGradient",
    "ScheduleRangeError",
    "LrSchedule",
    "cosine_lr",
    "AdamState",
    "adam_step",
    "clip_by_global_norm",
]

from dataclasses import dataclass
import math

from config.errors import UsageError
from .errors import ScheduleRangeError


@dataclass(frozen=True)
class LrSchedule:
    """Cosine decay from xi_max at l=0 to xi_min at l=L, no restarts."""
    xi_min: float = 1e-4
    xi_max: float = 1e-3
    total: int = 30000

    def __post_init__(self):
        if not 0 < self.xi_min <= self.xi_max:
            raise UsageError(f"need 0 < xi_min <= xi_max, got {self.xi_min}, {self.xi_max}")
        if self.total < 1:
            raise UsageError(f"schedule length must be >= 1, got {self.total}")


def cosine_lr(step: int, sched: LrSchedule) -> float:
    if not 0 <= step <= sched.total:
        raise ScheduleRangeError(step, sched.total)
    return sched.xi_min + 0.5 * (sched.xi_max - sched.xi_min) * (1.0 + math.cos(math.pi * step / sched.total))

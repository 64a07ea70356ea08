from config.errors import NumericFailure, UsageError


class ScheduleRangeError(UsageError):
    """Iteration index outside [0, L]."""

    def __init__(self, step: int, total: int):
        self.step = step
        self.total = total
        super().__init__(f"iteration {step} outside schedule range [0, {total}]")


class PoisonedGradient(NumericFailure):
    """A gradient coordinate is NaN or infinite."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-finite gradient {value} at flat index {index}")

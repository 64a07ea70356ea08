from config.errors import NumericFailure


class ForecastDiverged(NumericFailure):
    """A sample path became non-finite; ``partial`` holds the steps before it."""

    def __init__(self, step: int, partial):
        self.step = step
        self.partial = partial
        super().__init__(f"forecast diverged at step {step + 1}")

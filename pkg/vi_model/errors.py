from config.errors import NumericFailure


class TrainingFailure(NumericFailure):
    """Loss or gradient became non-finite during training."""

    def __init__(self, iteration: int, detail: str):
        self.iteration = iteration
        super().__init__(f"training failed at iteration {iteration}: {detail}")

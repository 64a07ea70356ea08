from config.errors import NumericFailure, UsageError


class IntegrationDiverged(NumericFailure):
    """The integrated state became non-finite."""

    def __init__(self, step: int, trajectory: int | None = None):
        self.step = step
        self.trajectory = trajectory
        where = f" (trajectory {trajectory})" if trajectory is not None else ""
        super().__init__(f"Integration diverged at step {step}{where}")


class DegenerateDimension(UsageError):
    """A data dimension is constant over the training split."""

    def __init__(self, name: str, index: int):
        self.name = name
        self.index = index
        super().__init__(f"Dimension {name}[{index}] has max == min over the training split")

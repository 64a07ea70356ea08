"""Training and validation windows over a normalized dataset."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from config.errors import UsageError
from dyngen import Dataset


@dataclass(frozen=True)
class WindowSource:
    """Normalized y and u of every trajectory, shape (K, T+1, .)."""
    y: np.ndarray
    u: np.ndarray
    train_indices: tuple[int, ...]
    val_indices: tuple[int, ...]

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "WindowSource":
        y, u, _ = dataset.stacked(range(dataset.k))
        return cls(y=y, u=u, train_indices=dataset.train_indices, val_indices=dataset.val_indices)

    @property
    def length(self) -> int:
        return self.y.shape[1]

    def gather(self, traj: np.ndarray, start: np.ndarray, n_points: int) -> tuple[np.ndarray, np.ndarray]:
        """Windows as time-major arrays (n_points, B, .)."""
        if n_points > self.length:
            raise UsageError(f"window of {n_points} points exceeds trajectory length {self.length}")
        rows = traj[:, None]
        cols = start[:, None] + np.arange(n_points)[None, :]
        return (
            np.ascontiguousarray(self.y[rows, cols].transpose(1, 0, 2)),
            np.ascontiguousarray(self.u[rows, cols].transpose(1, 0, 2)),
        )


def sample_windows(
    indices: Sequence[int],
    batch: int,
    n_points: int,
    length: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Trajectories drawn with replacement, then uniform start offsets."""
    if n_points > length:
        raise UsageError(f"window of {n_points} points exceeds trajectory length {length}")
    traj = rng.choice(np.asarray(indices), size=batch, replace=True)
    start = rng.integers(0, length - n_points + 1, size=batch)
    return traj, start

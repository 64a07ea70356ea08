"""Trajectories, normalization statistics and the train/validation split."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDimension
from .mackey_glass import MgParams
from .vdp import VdpParams


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def _as_columns(values: np.ndarray | None, length: int) -> np.ndarray:
    if values is None:
        return np.empty((length, 0), dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    return values.reshape(length, -1) if values.ndim == 1 else values


@dataclass(frozen=True)
class Trajectory:
    """One sampled trajectory in raw units: y = phi + noise, forcing u."""
    y: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    params: MgParams | VdpParams
    dt_sample: float

    def __post_init__(self):
        n = len(self.y)
        object.__setattr__(self, "y", _frozen(_as_columns(self.y, n)))
        object.__setattr__(self, "u", _frozen(_as_columns(self.u, n)))
        object.__setattr__(self, "phi", _frozen(_as_columns(self.phi, n)))
        if not (len(self.u) == len(self.phi) == n):
            raise ValueError("y, u and phi must have equal length")

    @property
    def length(self) -> int:
        return len(self.y)

    @property
    def obs_dim(self) -> int:
        return self.y.shape[1]

    @property
    def forcing_dim(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class NormStats:
    """Per-dimension (min, max) of y and u over the training split."""
    y_min: np.ndarray
    y_max: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray

    def __post_init__(self):
        for name in ("y_min", "y_max", "u_min", "u_max"):
            object.__setattr__(self, name, _frozen(np.atleast_1d(getattr(self, name))))

    @property
    def y_scale(self) -> np.ndarray:
        return self.y_max - self.y_min

    def normalize_y(self, y: np.ndarray) -> np.ndarray:
        return (y - self.y_min) / (self.y_max - self.y_min) - 0.5

    def denormalize_y(self, y: np.ndarray) -> np.ndarray:
        return (y + 0.5) * (self.y_max - self.y_min) + self.y_min

    def normalize_u(self, u: np.ndarray) -> np.ndarray:
        if u.shape[-1] == 0:
            return u
        return (u - self.u_min) / (self.u_max - self.u_min) - 0.5

    def denormalize_u(self, u: np.ndarray) -> np.ndarray:
        if u.shape[-1] == 0:
            return u
        return (u + 0.5) * (self.u_max - self.u_min) + self.u_min

    def to_dict(self) -> dict[str, list[float]]:
        return {name: getattr(self, name).tolist() for name in ("y_min", "y_max", "u_min", "u_max")}

    @classmethod
    def from_dict(cls, raw: dict) -> "NormStats":
        return cls(**{name: np.asarray(raw[name], dtype=np.float64) for name in ("y_min", "y_max", "u_min", "u_max")})


@dataclass(frozen=True)
class Dataset:
    """Raw-unit trajectories with normalization statistics and the split."""
    trajectories: tuple[Trajectory, ...]
    norm_stats: NormStats
    train_indices: tuple[int, ...]
    val_indices: tuple[int, ...]
    seed: int = 0
    noise_sigma: float = 0.0
    system: str = "mackey_glass"
    dt_fine: float = 0.0
    stride: int = 1

    @property
    def k(self) -> int:
        return len(self.trajectories)

    @property
    def t(self) -> int:
        return self.trajectories[0].length - 1

    @property
    def obs_dim(self) -> int:
        return self.trajectories[0].obs_dim

    @property
    def forcing_dim(self) -> int:
        return self.trajectories[0].forcing_dim

    @property
    def noise_sigma_normalized(self) -> np.ndarray:
        """sigma_eps expressed in normalized units per y dimension."""
        return self.noise_sigma / self.norm_stats.y_scale

    def normalized(self, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Normalized (y, u, phi) of one trajectory."""
        traj = self.trajectories[index]
        stats = self.norm_stats
        return stats.normalize_y(traj.y), stats.normalize_u(traj.u), stats.normalize_y(traj.phi)

    def stacked(self, indices: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Normalized (y, u, phi) of several trajectories, shape (n, T+1, dim)."""
        parts = [self.normalized(i) for i in indices]
        return tuple(np.stack([p[j] for p in parts]) for j in range(3))

    def param_matrix(self, indices: Sequence[int]) -> tuple[list[str], np.ndarray]:
        """Ground-truth parameter names and values, for evaluation only."""
        dicts = [self.trajectories[i].params.as_dict() for i in indices]
        names = [name for name in dicts[0] if name != "u_ref"]
        return names, np.array([[d[name] for name in names] for d in dicts], dtype=np.float64)


def _minmax(blocks: list[np.ndarray], name: str) -> tuple[np.ndarray, np.ndarray]:
    stacked = np.concatenate(blocks, axis=0)
    if stacked.shape[1] == 0:
        return np.empty(0), np.empty(0)
    lo, hi = stacked.min(axis=0), stacked.max(axis=0)
    for i in range(len(lo)):
        if not hi[i] > lo[i]:
            raise DegenerateDimension(name, i)
    return lo, hi


def normalize_dataset(
    trajectories: Sequence[Trajectory],
    train_indices: Sequence[int],
    seed: int = 0,
    noise_sigma: float = 0.0,
    **metadata,
) -> Dataset:
    """
    Compute per-dimension min/max over the training split and build the Dataset.

    y* = (y - min) / (max - min) - 0.5 is applied lazily through NormStats;
    every index not in ``train_indices`` belongs to the validation split.
    """
    train = tuple(sorted(int(i) for i in train_indices))
    train_set = set(train)
    val = tuple(i for i in range(len(trajectories)) if i not in train_set)
    y_min, y_max = _minmax([trajectories[i].y for i in train], "y")
    u_min, u_max = _minmax([trajectories[i].u for i in train], "u")
    stats = NormStats(y_min=y_min, y_max=y_max, u_min=u_min, u_max=u_max)
    return Dataset(
        trajectories=tuple(trajectories),
        norm_stats=stats,
        train_indices=train,
        val_indices=val,
        seed=seed,
        noise_sigma=noise_sigma,
        **metadata,
    )


def first_split(k: int, train_count: int) -> list[int]:
    """The first ``train_count`` trajectories form the training split."""
    return list(range(train_count))

"""Dataset directories: manifest.json plus one binary block per trajectory.

Binary layout: magic "VIDYN-TRJ1", u32 column count, u32 row count, then
row-major little-endian f64 with columns (y..., u..., phi...).
"""

import json
import logging
import struct
from pathlib import Path

import numpy as np

from .dataset import Dataset, NormStats, Trajectory
from .systems import params_type

logger = logging.getLogger(__name__)

TRAJECTORY_MAGIC = b"VIDYN-TRJ1"
MANIFEST_NAME = "manifest.json"


class DatasetFormatError(OSError):
    """A dataset file is missing, truncated or has the wrong magic."""


def _trajectory_path(root: Path, index: int) -> Path:
    return root / f"traj_{index:04d}.bin"


def write_trajectory(path: Path, traj: Trajectory) -> None:
    block = np.concatenate([traj.y, traj.u, traj.phi], axis=1)
    rows, cols = block.shape
    with open(path, "wb") as f:
        f.write(TRAJECTORY_MAGIC)
        f.write(struct.pack("<II", cols, rows))
        f.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def read_trajectory(path: Path) -> np.ndarray:
    data = path.read_bytes()
    header = len(TRAJECTORY_MAGIC) + 8
    if len(data) < header or data[: len(TRAJECTORY_MAGIC)] != TRAJECTORY_MAGIC:
        raise DatasetFormatError(f"{path} is not a trajectory block")
    cols, rows = struct.unpack("<II", data[len(TRAJECTORY_MAGIC): header])
    if len(data) != header + 8 * rows * cols:
        raise DatasetFormatError(f"{path} is truncated")
    return np.frombuffer(data, dtype="<f8", offset=header).reshape(rows, cols).astype(np.float64)


def save_dataset(dataset: Dataset, root: str | Path) -> Path:
    """Write the dataset directory; returns its path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "system": dataset.system,
        "K": dataset.k,
        "T": dataset.t,
        "dt_fine": dataset.dt_fine,
        "stride": dataset.stride,
        "dt_sample": dataset.trajectories[0].dt_sample,
        "sigma_eps": dataset.noise_sigma,
        "seed": dataset.seed,
        "norm_stats": dataset.norm_stats.to_dict(),
        "train_count": len(dataset.train_indices),
        "val_count": len(dataset.val_indices),
        "train_indices": list(dataset.train_indices),
        "obs_dim": dataset.obs_dim,
        "forcing_dim": dataset.forcing_dim,
        "params": [traj.params.as_dict() for traj in dataset.trajectories],
    }
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for i, traj in enumerate(dataset.trajectories):
        write_trajectory(_trajectory_path(root, i), traj)
    logger.info(f"Wrote {dataset.k} trajectories to {root}")
    return root


def load_dataset(root: str | Path) -> Dataset:
    """Read a dataset directory written by save_dataset."""
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise DatasetFormatError(f"No {MANIFEST_NAME} in {root}")
    manifest = json.loads(manifest_path.read_text())

    d, n_u = manifest["obs_dim"], manifest["forcing_dim"]
    ptype = params_type(manifest["system"])
    trajectories = []
    for i in range(manifest["K"]):
        block = read_trajectory(_trajectory_path(root, i))
        params = ptype(**manifest["params"][i])
        trajectories.append(Trajectory(
            y=block[:, :d],
            u=block[:, d: d + n_u],
            phi=block[:, d + n_u:],
            params=params,
            dt_sample=manifest["dt_sample"],
        ))

    train = tuple(manifest.get("train_indices", range(manifest["train_count"])))
    train_set = set(train)
    return Dataset(
        trajectories=tuple(trajectories),
        norm_stats=NormStats.from_dict(manifest["norm_stats"]),
        train_indices=train,
        val_indices=tuple(i for i in range(manifest["K"]) if i not in train_set),
        seed=manifest["seed"],
        noise_sigma=manifest["sigma_eps"],
        system=manifest["system"],
        dt_fine=manifest["dt_fine"],
        stride=manifest["stride"],
    )

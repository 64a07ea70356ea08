import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from config.run_config import RunConfig  # noqa: E402
from dyngen import first_split, get_generator, normalize_dataset, save_dataset  # noqa: E402


TINY = {
    "data": {"system": "mackey_glass", "k": 6, "t": 60, "train_count": 4, "seed": 3, "burn_in": 20.0},
    "model": {"n_c": 4, "n_z": 2, "posterior_layers": 2, "posterior_width": 6},
    "train": {
        "lambda": 1.0,
        "lambdas": [0.1, 1.0],
        "seq_len": 8,
        "batch": 2,
        "mc_samples": 2,
        "iterations": 4,
        "eval_interval": 2,
        "val_windows": 2,
        "log_interval": 1,
        "seed": 3,
    },
    "simulate": {
        "tau": 10,
        "onestep_samples": 3,
        "n_samples": 5,
        "horizon": 10,
        "starts": [10, 20],
        "val_trajectories": 2,
        "seed": 3,
    },
    "eval": {"discard": 5, "draws_per_q": 3, "latent_timestamps": [20, 40]},
    "threads": 1,
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_config(tmp_path):
    raw = {**TINY, "output_dir": str(tmp_path / "runs")}
    return RunConfig.model_validate(raw)


@pytest.fixture(scope="session")
def tiny_dataset():
    """Six short Mackey-Glass trajectories, four of them in the training split."""
    data = TINY["data"]
    generator = get_generator(data["system"], burn_in=data["burn_in"])
    trajectories = generator.generate(data["k"], data["t"], data["seed"])
    return normalize_dataset(
        trajectories,
        first_split(data["k"], data["train_count"]),
        seed=data["seed"],
        noise_sigma=generator.sigma_eps,
        system=generator.system,
        dt_fine=generator.dt_fine,
        stride=generator.stride,
    )


@pytest.fixture
def dataset_dir(tiny_dataset, tmp_path):
    return save_dataset(tiny_dataset, tmp_path / "dataset")

"""CSV and JSON artifacts written with pandas."""

from pathlib import Path
from typing import Any
import json
import logging

import numpy as np
import pandas as pd

from config.errors import UsageError
from config.run_config import RunConfig
from simulate import ForecastEnsemble, OneStepPrediction, ensemble_frame, onestep_frame, summarize_ensemble

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_csv(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"Missing input file: {path}")
    return pd.read_csv(path, float_precision="round_trip")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_json(payload: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def write_resolved_config(config: RunConfig, out_dir: str | Path) -> Path:
    path = Path(out_dir) / "resolved_config.yaml"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.dump_yaml())
    return path


def forecast_paths(out_dir: Path, traj: int, start: int) -> tuple[Path, Path]:
    stem = f"traj_{traj:04d}_start_{start:04d}"
    return out_dir / f"{stem}_ensemble.csv", out_dir / f"{stem}_summary.csv"


def write_forecast(ensemble: ForecastEnsemble, levels, out_dir: Path, traj: int) -> tuple[Path, Path]:
    ens_path, sum_path = forecast_paths(out_dir, traj, ensemble.start)
    write_csv(ensemble_frame(ensemble), ens_path)
    write_csv(summarize_ensemble(ensemble, levels), sum_path)
    return ens_path, sum_path


def read_ensemble(path: str | Path) -> tuple[int, np.ndarray]:
    """(start, samples of shape (N_s, T_f, d)) from an ensemble CSV."""
    frame = read_csv(path).sort_values(["sample_id", "t"], kind="stable")
    n = int(frame["sample_id"].max()) + 1
    ycols = [c for c in frame.columns if c.startswith("y_")]
    values = frame[ycols].to_numpy(dtype=np.float64)
    start = int(frame["t"].min()) - 1
    return start, values.reshape(n, -1, len(ycols))


def onestep_path(out_dir: Path, traj: int) -> Path:
    return out_dir / f"traj_{traj:04d}_onestep.csv"


def write_onestep(pred: OneStepPrediction, out_dir: Path, traj: int) -> Path:
    return write_csv(onestep_frame(pred), onestep_path(out_dir, traj))


def read_onestep(path: str | Path) -> OneStepPrediction:
    """Moments and lo_<p>/hi_<p> bounds, each reshaped to (steps, d)."""
    frame = read_csv(path).sort_values(["t", "dim"], kind="stable")
    d = int(frame["dim"].max()) + 1

    def column(name: str) -> np.ndarray:
        return frame[name].to_numpy(dtype=np.float64).reshape(-1, d)

    levels = {c[len("lo_"):]: float(c[len("lo_"):]) for c in frame.columns if c.startswith("lo_")}
    return OneStepPrediction(
        mu=column("mu"),
        sigma=column("sigma"),
        lower={p: column(f"lo_{tag}") for tag, p in levels.items()},
        upper={p: column(f"hi_{tag}") for tag, p in levels.items()},
    )

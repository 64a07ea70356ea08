"""Loader for run configuration (run_config.yaml and presets).

Every field default is the value used in the reference experiments; the
desk-scale preset lives in ``desk_config.yaml``.
"""

from functools import lru_cache
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import UsageError

CONFIG_DIR = Path(__file__).parent
DEFAULT_CONFIG_PATH = CONFIG_DIR / "run_config.yaml"
DESK_CONFIG_PATH = CONFIG_DIR / "desk_config.yaml"


def _split_csv(value: Any) -> Any:
    """Accept "0.1,1,10" style strings from the command line for list fields."""
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class DataConfig(_Section):
    """Synthetic dataset generation."""

    system: Literal["mackey_glass", "vdp"] = Field(
        default="mackey_glass", description="Dynamical system: mackey_glass or vdp"
    )
    k: int = Field(default=500, ge=2, description="Number of trajectories K")
    t: int = Field(default=1000, ge=2, description="Observed steps per trajectory T")
    train_count: int | None = Field(
        default=None, description="Training split size (default: first 80% of K, i.e. 400 of 500)"
    )
    seed: int = Field(default=0, ge=0, description="Master seed for generation")
    dt_fine: float | None = Field(
        default=None, gt=0, description="Integrator step (MG 0.01, VDP 0.001)"
    )
    dt_sample: float | None = Field(
        default=None, gt=0, description="Sampling interval delta t (MG 1.0, VDP 0.2)"
    )
    sigma_eps: float | None = Field(
        default=None, ge=0, description="Observation noise std in raw units (MG 0.03, VDP 0.075)"
    )
    burn_in: float | None = Field(
        default=None, ge=0, description="Discarded spin-up time (MG 300, VDP 50)"
    )
    param_overrides: list[list[float]] = Field(
        default_factory=list,
        description="Explicit parameter tuples used for the first trajectories, e.g. [[0.35, 0.07, 33.72]]",
    )

    @model_validator(mode="after")
    def check_split(self):
        if self.train_count is not None and not 1 <= self.train_count < self.k:
            raise ValueError(f"train_count must lie in [1, k), got {self.train_count}")
        return self

    @property
    def resolved_train_count(self) -> int:
        if self.train_count is not None:
            return self.train_count
        return int(0.8 * self.k)


class ModelConfig(_Section):
    """Network dimensions."""

    n_c: int = Field(default=128, ge=1, description="GRU hidden width N_c (both levels)")
    n_z: int = Field(default=10, ge=0, description="Latent dimension N_z")
    posterior_layers: int = Field(default=3, ge=1, description="Posterior network depth N_eta")
    posterior_width: int | None = Field(
        default=None, ge=1, description="Posterior layer width N_v (default 2*N_c = 256)"
    )

    @property
    def resolved_posterior_width(self) -> int:
        return self.posterior_width or 2 * self.n_c


class TrainConfig(_Section):
    """Optimization of the encoder, VI model and baseline."""

    lambda_: float = Field(default=1.0, ge=0, alias="lambda", description="KL penalty lambda")
    lambdas: list[float] = Field(
        default_factory=lambda: [0.01, 0.1, 1.0, 10.0],
        description="Lambda sweep used by multi-checkpoint training",
    )
    seq_len: int = Field(default=200, ge=1, description="Training window length T")
    batch: int = Field(default=20, ge=1, description="Minibatch size")
    mc_samples: int = Field(default=25, ge=1, description="Monte Carlo samples M in L_y")
    iterations: int = Field(default=30000, ge=1, description="Maximum iterations L")
    sigma_z: float = Field(default=1.0, gt=0, description="Prior standard deviation sigma_z")
    xi_max: float = Field(default=1e-3, gt=0, description="Initial learning rate")
    xi_min: float = Field(default=1e-4, gt=0, description="Final learning rate")
    clip: float = Field(default=5.0, ge=0, description="Global gradient-norm clip (0 disables)")
    beta1: float = Field(default=0.9, ge=0, lt=1, description="ADAM beta1")
    beta2: float = Field(default=0.999, ge=0, lt=1, description="ADAM beta2")
    eps: float = Field(default=1e-8, gt=0, description="ADAM epsilon")
    eval_interval: int = Field(default=500, ge=1, description="Iterations between validation checks")
    val_windows: int = Field(default=20, ge=1, description="Fixed validation windows")
    log_interval: int = Field(default=100, ge=1, description="Iterations between log rows")
    seed: int = Field(default=0, ge=0, description="Training seed")

    @field_validator("lambdas", mode="before")
    @classmethod
    def split_lambdas(cls, value: Any) -> Any:
        return _split_csv(value)

    @model_validator(mode="after")
    def check_rates(self):
        if self.xi_min > self.xi_max:
            raise ValueError("xi_min must not exceed xi_max")
        if any(lam < 0 for lam in self.lambdas):
            raise ValueError("lambdas must be non-negative")
        return self


class SimulationConfig(_Section):
    """Spin-up, one-step prediction and Monte Carlo forecasting."""

    tau: int = Field(default=200, ge=1, description="Spin-up history length tau")
    onestep_samples: int = Field(default=200, ge=1, description="Latent samples M for one-step mixtures")
    onestep_draws: int = Field(
        default=1000, ge=1, description="Mixture draws per step for one-step empirical intervals"
    )
    n_samples: int = Field(default=1000, ge=1, description="Forecast ensemble size N_s")
    horizon: int = Field(default=500, ge=1, description="Forecast horizon T_f")
    starts: list[int] = Field(
        default_factory=lambda: [300, 350, 400, 450, 500],
        description="Forecast start indices t_0",
    )
    coverage_levels: list[float] = Field(
        default_factory=lambda: [0.6, 0.7, 0.8, 0.9, 0.95],
        description="Prediction-interval levels p",
    )
    val_trajectories: int | None = Field(
        default=None, ge=1, description="Limit on validation trajectories used (default: all)"
    )
    seed: int = Field(default=0, ge=0, description="Simulation seed")

    @field_validator("starts", "coverage_levels", mode="before")
    @classmethod
    def split_lists(cls, value: Any) -> Any:
        return _split_csv(value)

    @field_validator("coverage_levels")
    @classmethod
    def check_levels(cls, levels: list[float]) -> list[float]:
        if any(not 0 < p < 1 for p in levels):
            raise ValueError("coverage levels must lie in (0, 1)")
        return sorted(levels)


class EvalConfig(_Section):
    """Metric and latent-analysis options."""

    discard: int = Field(default=200, ge=0, description="Leading steps excluded from one-step metrics")
    ll_denominator: Literal["var", "std"] = Field(
        default="var", description="Quadratic denominator in LL: var (sigma^2) or std (literal form)"
    )
    latent_timestamps: list[int] | None = Field(
        default=None, description="Prefix lengths for latent analysis (default: 5 evenly in [200, T])"
    )
    draws_per_q: int = Field(default=20, ge=1, description="Samples drawn from each posterior")
    delta: float = Field(default=0.1, gt=0, description="Off-diagonal correlation threshold for lambda*")

    @field_validator("latent_timestamps", mode="before")
    @classmethod
    def split_stamps(cls, value: Any) -> Any:
        return _split_csv(value)


class RunConfig(_Section):
    """Fully resolved configuration of one run."""

    data: DataConfig = Field(default_factory=DataConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    simulate: SimulationConfig = Field(default_factory=SimulationConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    output_dir: str = Field(default="runs", description="Root directory for run outputs")
    threads: int = Field(default=1, ge=1, description="Worker thread cap")

    def with_seed(self, seed: int) -> "RunConfig":
        """Return a copy whose data, training and simulation seeds all equal ``seed``."""
        raw = self.model_dump(by_alias=True)
        for section in ("data", "train", "simulate"):
            raw[section]["seed"] = seed
        return RunConfig.model_validate(raw)

    def dump_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(by_alias=True), sort_keys=True)


def _apply_override(raw: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise UsageError(f"Config key {key!r} does not name a section")
    if isinstance(value, str):
        try:
            value = yaml.safe_load(value)
        except yaml.YAMLError:
            pass
    node[parts[-1]] = value


def load_run_config(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """Load run configuration from a YAML (or JSON) file.

    Args:
        config_path: Path to the file. Defaults to config/run_config.yaml
                     relative to this file.
        overrides: Dotted keys (``train.lambda``) mapped to values; these win
                   over the file.
    """
    if config_path is None:
        config_path = DEFAULT_CONFIG_PATH
    else:
        config_path = Path(config_path)

    if not config_path.exists():
        raise UsageError(f"Config file not found: {config_path}")

    with open(config_path) as f:
        raw = yaml.safe_load(f) or {}

    for key, value in (overrides or {}).items():
        _apply_override(raw, key, value)

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise UsageError(f"Invalid configuration in {config_path}:\n{e}") from e


@lru_cache
def get_run_config() -> RunConfig:
    """Get cached default run configuration instance."""
    return load_run_config()


def describe_fields() -> list[tuple[str, Any, str]]:
    """List (dotted key, default, description) for every config field, for --help."""
    rows = []
    for section_name, section_field in RunConfig.model_fields.items():
        annotation = section_field.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            for name, info in annotation.model_fields.items():
                key = info.alias or name
                default = info.default_factory() if info.default_factory else info.default
                rows.append((f"{section_name}.{key}", default, info.description or ""))
        else:
            rows.append((section_name, section_field.default, section_field.description or ""))
    return rows

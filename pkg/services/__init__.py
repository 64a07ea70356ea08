from .checkpoint import (
    Checkpoint,
    CheckpointFormatError,
    checkpoint_from_model,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
)
from .experiment import (
    RunPaths,
    cmd_evaluate,
    cmd_forecast,
    cmd_generate,
    cmd_latent,
    cmd_onestep,
    cmd_train,
    forecast_case,
    onestep_case,
    reproduce_desk,
    score_forecasts,
    score_onestep,
)

__all__ = [
    "Checkpoint",
    "CheckpointFormatError",
    "checkpoint_from_model",
    "load_checkpoint",
    "model_from_checkpoint",
    "save_checkpoint",
    "RunPaths",
    "cmd_evaluate",
    "cmd_forecast",
    "cmd_generate",
    "cmd_latent",
    "cmd_onestep",
    "cmd_train",
    "forecast_case",
    "onestep_case",
    "reproduce_desk",
    "score_forecasts",
    "score_onestep",
]

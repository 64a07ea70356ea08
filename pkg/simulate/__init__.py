from .errors import ForecastDiverged
from .quantiles import empirical_interval, interval_bounds
from .spin_up import SpinUpContext, StepModel, model_input, spin_up
from .one_step import (
    OneStepPrediction,
    mixture_draws,
    mixture_moments,
    mixture_prediction,
    one_step_predict,
    sample_latents,
    teacher_forced,
)
from .forecast import ForecastEnsemble, forecast_model, mc_forecast
from .summary import ensemble_frame, onestep_frame, summarize_ensemble

__all__ = [
    "ForecastDiverged",
    "empirical_interval",
    "interval_bounds",
    "SpinUpContext",
    "StepModel",
    "model_input",
    "spin_up",
    "OneStepPrediction",
    "mixture_draws",
    "mixture_moments",
    "mixture_prediction",
    "one_step_predict",
    "sample_latents",
    "teacher_forced",
    "ForecastEnsemble",
    "forecast_model",
    "mc_forecast",
    "ensemble_frame",
    "onestep_frame",
    "summarize_ensemble",
]

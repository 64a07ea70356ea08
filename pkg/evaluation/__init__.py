from .metrics import coverage, forecast_growth, interval_coverage, nmae_per_case, onestep_metrics
from .latent import LatentReport, default_timestamps, lambda_selection, latent_analysis, pca_spectrum, safe_corrcoef
from .reports import MetricsReport, latent_frames

__all__ = [
    "coverage",
    "forecast_growth",
    "interval_coverage",
    "nmae_per_case",
    "onestep_metrics",
    "LatentReport",
    "default_timestamps",
    "lambda_selection",
    "latent_analysis",
    "pca_spectrum",
    "safe_corrcoef",
    "MetricsReport",
    "latent_frames",
]

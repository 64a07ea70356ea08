from .errors import TrainingFailure
from .models import DecoderModel, EncoderModel, PosteriorGaussian, VIModel
from .losses import (
    gaussian_nll,
    gaussian_nll_adjoints,
    kl_gaussian,
    kl_per_dim,
    reconstruction_loss,
    reparam_sample,
)
from .windows import WindowSource, sample_windows
from .training import (
    LossParts,
    TrainingResult,
    encode_prefixes,
    posterior_trajectory,
    regression_gradient,
    train_baseline,
    train_encoder,
    train_regression,
    train_vi,
    vi_gradient,
    vi_loss,
    vi_train_step,
)

__all__ = [
    "TrainingFailure",
    "DecoderModel",
    "EncoderModel",
    "PosteriorGaussian",
    "VIModel",
    "gaussian_nll",
    "gaussian_nll_adjoints",
    "kl_gaussian",
    "kl_per_dim",
    "reconstruction_loss",
    "reparam_sample",
    "WindowSource",
    "sample_windows",
    "LossParts",
    "TrainingResult",
    "encode_prefixes",
    "posterior_trajectory",
    "regression_gradient",
    "train_baseline",
    "train_encoder",
    "train_regression",
    "train_vi",
    "vi_gradient",
    "vi_loss",
    "vi_train_step",
]

from .errors import ShapeError
from .params import ParamSpec, ParameterLayout, uniform_init
from .layers import (
    LOG_SIGMA_MAX,
    LOG_SIGMA_MIN,
    GaussianPrediction,
    LinearParams,
    clamp_log_sigma,
    clamp_mask,
    linear_backward,
    linear_forward,
    relu,
    relu_backward,
)
from .gru import GruCell, gru_cell_backward, gru_cell_forward
from .recurrent import (
    GaussianHead,
    GruStack,
    RecurrentNet,
    State,
    Tape,
    bptt_backward,
    recurrent_layout,
    rnn_step,
)
from .feedforward import PosteriorNet, posterior_layout

__all__ = [
    "ShapeError",
    "ParamSpec",
    "ParameterLayout",
    "uniform_init",
    "LOG_SIGMA_MAX",
    "LOG_SIGMA_MIN",
    "GaussianPrediction",
    "LinearParams",
    "clamp_log_sigma",
    "clamp_mask",
    "linear_backward",
    "linear_forward",
    "relu",
    "relu_backward",
    "GruCell",
    "gru_cell_backward",
    "gru_cell_forward",
    "GaussianHead",
    "GruStack",
    "RecurrentNet",
    "State",
    "Tape",
    "bptt_backward",
    "recurrent_layout",
    "rnn_step",
    "PosteriorNet",
    "posterior_layout",
]

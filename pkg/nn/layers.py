from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

LOG_SIGMA_MIN = -7.0
LOG_SIGMA_MAX = 2.0


@dataclass
class LinearParams:
    """Affine map x -> W x + b; W is (out, in)."""
    W: np.ndarray
    b: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    @staticmethod
    def entries(prefix: str, n_in: int, n_out: int) -> list[tuple[str, tuple[int, ...]]]:
        return [(f"{prefix}.W", (n_out, n_in)), (f"{prefix}.b", (n_out,))]

    @classmethod
    def from_views(cls, views: dict[str, np.ndarray], prefix: str) -> "LinearParams":
        return cls(W=views[f"{prefix}.W"], b=views[f"{prefix}.b"])


@dataclass(frozen=True)
class GaussianPrediction:
    """Per-step Gaussian output: mean and clamped log standard deviation."""
    mu: np.ndarray
    log_sigma: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma)


def linear_forward(params: LinearParams, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != params.in_dim:
        raise ShapeError(f"linear layer expects input dim {params.in_dim}, got {x.shape[-1]}")
    return x @ params.W.T + params.b


def linear_backward(params: LinearParams, x: np.ndarray, dy: np.ndarray, grad: LinearParams) -> np.ndarray:
    """Accumulate dW, db into ``grad`` and return dx. x and dy are (B, .)."""
    grad.W += dy.T @ x
    grad.b += dy.sum(axis=0)
    return dy @ params.W


def relu(a: np.ndarray) -> np.ndarray:
    return np.maximum(a, 0.0)


def relu_backward(a: np.ndarray, dy: np.ndarray) -> np.ndarray:
    # subgradient at 0 is 0
    return dy * (a > 0.0)


def clamp_log_sigma(raw: np.ndarray) -> np.ndarray:
    return np.clip(raw, LOG_SIGMA_MIN, LOG_SIGMA_MAX)


def clamp_mask(raw: np.ndarray) -> np.ndarray:
    """1 where the clamp is the identity, 0 where it saturates."""
    return ((raw > LOG_SIGMA_MIN) & (raw < LOG_SIGMA_MAX)).astype(np.float64)

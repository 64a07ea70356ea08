"""ADAM with bias correction and global-norm clipping on flat buffers."""

from dataclasses import dataclass

import numpy as np

from config.errors import UsageError
from .errors import PoisonedGradient


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise UsageError(f"ADAM betas must lie in [0, 1), got {beta1}, {beta2}")
        return cls(m=np.zeros(n), v=np.zeros(n), beta1=beta1, beta2=beta2, eps=eps)


def clip_by_global_norm(grads: np.ndarray, clip: float) -> tuple[np.ndarray, float]:
    """Return (possibly rescaled) gradients and the norm before clipping."""
    norm = float(np.linalg.norm(grads))
    if clip > 0 and norm > clip:
        return grads * (clip / norm), norm
    return grads, norm


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    rate: float,
    clip: float = 5.0,
) -> float:
    """
    One in-place ADAM update of ``params``.

    Args:
        params: Flat parameter buffer, updated in place.
        grads: Flat gradient buffer with the same layout.
        state: Moment buffers; step is incremented.
        rate: Learning rate for this iteration.
        clip: Global L2-norm threshold; 0 disables clipping.

    Returns:
        Gradient norm after clipping.
    """
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise UsageError(f"shape mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise PoisonedGradient(int(bad[0]), float(grads[bad[0]]))

    g, _ = clip_by_global_norm(grads, clip)
    state.step += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    params -= rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return float(np.linalg.norm(g))

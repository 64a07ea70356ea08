"""Teacher-forced spin-up of a recurrent model over an observed history."""

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from config.errors import UsageError
from nn import GaussianPrediction


class StepModel(Protocol):
    """Anything that advances a hidden state one input at a time."""

    n_x: int

    def zero_state(self, batch: int) -> Any: ...

    def step(self, x_t: np.ndarray, state: Any) -> tuple[GaussianPrediction, Any]: ...


@dataclass
class SpinUpContext:
    tau: int
    state: Any
    prediction: GaussianPrediction
    z: np.ndarray | None


def model_input(y: np.ndarray, u: np.ndarray, z: np.ndarray | None, batch: int) -> np.ndarray:
    """(y, u, z) for one step; y and u broadcast over the batch."""
    parts = [np.broadcast_to(y, (batch, y.shape[-1])), np.broadcast_to(u, (batch, u.shape[-1]))]
    if z is not None:
        parts.append(z)
    return np.concatenate(parts, axis=-1)


def spin_up(
    model: StepModel,
    y_hist: np.ndarray,
    u_hist: np.ndarray,
    z: np.ndarray | None = None,
    batch: int = 1,
) -> SpinUpContext:
    """
    Roll ``model`` from h_0 = 0 over Y_{-tau:0}, U_{-tau:0}.

    Args:
        y_hist, u_hist: History of tau + 1 points, shape (tau+1, d) and (tau+1, N_u).
        z: Latent samples (S, N_z); one context row per sample. None for the baseline.
        batch: Number of rows when ``z`` is None.

    Returns:
        The state after consuming y_0 and the prediction for step 1.
    """
    tau = len(y_hist) - 1
    if tau < 1:
        raise UsageError(f"spin-up needs tau >= 1 history steps, got {tau}")
    if len(u_hist) != len(y_hist):
        raise UsageError(f"history lengths differ: y {len(y_hist)}, u {len(u_hist)}")
    rows = batch if z is None else len(z)
    state = model.zero_state(rows)
    pred = None
    for t in range(tau + 1):
        pred, state = model.step(model_input(y_hist[t], u_hist[t], z, rows), state)
    return SpinUpContext(tau=tau, state=state, prediction=pred, z=z)

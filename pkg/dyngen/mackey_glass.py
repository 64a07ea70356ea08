"""Mackey-Glass delay system with random (alpha, gamma, tau)."""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from config.errors import UsageError
from .errors import IntegrationDiverged
from .integrators import AdamsBashforth3, first_nonfinite

logger = logging.getLogger(__name__)

MG_RANGES = {
    "alpha": (0.2, 0.4),
    "gamma": (0.05, 0.1),
    "tau": (20.0, 40.0),
}
MG_EXPONENT = 10
MG_HISTORY = 1.2


@dataclass(frozen=True)
class MgParams:
    """Gain alpha, decay rate gamma and delay tau of one trajectory."""
    alpha: float
    gamma: float
    tau: float

    def as_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "gamma": self.gamma, "tau": self.tau}

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "MgParams":
        alpha, gamma, tau = (float(v) for v in values)
        return cls(alpha=alpha, gamma=gamma, tau=tau)


def sample_mg_params(rng: np.random.Generator) -> MgParams:
    """Draw alpha, gamma, tau independently and uniformly over MG_RANGES."""
    return MgParams(
        alpha=float(rng.uniform(*MG_RANGES["alpha"])),
        gamma=float(rng.uniform(*MG_RANGES["gamma"])),
        tau=float(rng.uniform(*MG_RANGES["tau"])),
    )


def integrate_mackey_glass_batch(
    params: Sequence[MgParams],
    dt: float,
    n_steps: int,
    history: float | Callable[[np.ndarray], np.ndarray] = MG_HISTORY,
    burn_in: float = 300.0,
) -> np.ndarray:
    """
    Integrate dphi/dt = alpha phi(t-tau) / (1 + phi(t-tau)^10) - gamma phi(t) by AB3.

    The delayed value is linearly interpolated between stored grid points.
    Each row evolves independently; batching does not change the result.

    Args:
        params: One parameter set per trajectory.
        dt: Integrator step.
        n_steps: Steps kept after the burn-in.
        history: Constant or function of time giving phi on [-tau, 0].
        burn_in: Time discarded before the returned window.

    Returns:
        Array (K, n_steps + 1) of phi on the fine grid.
    """
    if dt <= 0:
        raise UsageError(f"dt must be positive, got {dt}")
    alpha = np.array([p.alpha for p in params], dtype=np.float64)
    gamma = np.array([p.gamma for p in params], dtype=np.float64)
    tau = np.array([p.tau for p in params], dtype=np.float64)
    lag = tau / dt
    if np.any(lag < 1):
        raise UsageError(f"tau/dt must be at least 1, got min {lag.min():.3g}")

    k = len(params)
    n_burn = int(round(burn_in / dt))
    n_total = n_burn + n_steps
    n_hist = int(np.ceil(lag.max())) + 1
    buf = np.zeros((k, n_hist + n_total + 2), dtype=np.float64)
    t_hist = (np.arange(n_hist + 1) - n_hist) * dt
    if callable(history):
        buf[:, : n_hist + 1] = np.broadcast_to(history(t_hist), (k, n_hist + 1))
    else:
        buf[:, : n_hist + 1] = float(history)
    rows = np.arange(k)

    def delayed(t):
        # grid-relative position of t - tau, independent of n_hist
        s = t / dt - lag
        j = np.floor(s)
        w = s - j
        idx = n_hist + j.astype(np.int64)
        return (1.0 - w) * buf[rows, idx] + w * buf[rows, idx + 1]

    def f(t, x, u):
        d = delayed(t)
        return alpha * d / (1.0 + d ** MG_EXPONENT) - gamma * x

    integrator = AdamsBashforth3(dt, f)
    x = buf[:, n_hist].copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_total):
            x = integrator.step(n * dt, x)
            buf[:, n_hist + n + 1] = x

    solution = buf[:, n_hist: n_hist + n_total + 1]
    bad = first_nonfinite(solution)
    if bad is not None:
        row = int(np.nonzero(~np.isfinite(solution[:, bad]))[0][0])
        raise IntegrationDiverged(step=bad, trajectory=row)
    return solution[:, n_burn:].copy()


def integrate_mackey_glass(
    params: MgParams,
    dt: float,
    n_steps: int,
    history: float | Callable[[np.ndarray], np.ndarray] = MG_HISTORY,
    burn_in: float = 300.0,
) -> np.ndarray:
    """Single-trajectory form of integrate_mackey_glass_batch; returns (n_steps + 1,)."""
    return integrate_mackey_glass_batch([params], dt, n_steps, history, burn_in)[0]

"""Forced Van der Pol oscillator driven by an Ornstein-Uhlenbeck process."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from config.errors import UsageError
from .errors import IntegrationDiverged
from .integrators import AdamsBashforth3, first_nonfinite

logger = logging.getLogger(__name__)

VDP_RANGES = {
    "gamma": (1.0, 4.0),
    "alpha": (0.25, 1.0),
    "theta": (0.25, 1.0),
}
VDP_INITIAL = (0.1, 0.0)


@dataclass(frozen=True)
class VdpParams:
    """Damping gamma, forcing amplitude alpha, OU reversion rate theta."""
    gamma: float
    alpha: float
    theta: float
    u_ref: float = 1.0

    def as_dict(self) -> dict[str, float]:
        return {"gamma": self.gamma, "alpha": self.alpha, "theta": self.theta, "u_ref": self.u_ref}

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "VdpParams":
        gamma, alpha, theta = (float(v) for v in values[:3])
        u_ref = float(values[3]) if len(values) > 3 else 1.0
        return cls(gamma=gamma, alpha=alpha, theta=theta, u_ref=u_ref)


@dataclass(frozen=True)
class VdpSolution:
    phi: np.ndarray
    velocity: np.ndarray
    u: np.ndarray


def sample_vdp_params(rng: np.random.Generator) -> VdpParams:
    """Draw gamma, alpha, theta independently and uniformly over VDP_RANGES."""
    return VdpParams(
        gamma=float(rng.uniform(*VDP_RANGES["gamma"])),
        alpha=float(rng.uniform(*VDP_RANGES["alpha"])),
        theta=float(rng.uniform(*VDP_RANGES["theta"])),
    )


def ou_path(
    theta: float,
    u_ref: float,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
    u0: float | None = None,
) -> np.ndarray:
    """
    Exact discretization of du = -theta u dt + u_ref sqrt(2 theta) dW.

    u_{k+1} = a u_k + u_ref sqrt(1 - a^2) xi_k with a = exp(-theta dt). When
    ``u0`` is None it is drawn from the stationary law N(0, u_ref^2).
    """
    if dt <= 0:
        raise UsageError(f"dt must be positive, got {dt}")
    if u0 is None:
        u0 = u_ref * rng.standard_normal()
    xi = rng.standard_normal(n_steps)
    a = np.exp(-theta * dt)
    b = u_ref * np.sqrt(-np.expm1(-2.0 * theta * dt))
    path = np.empty(n_steps + 1, dtype=np.float64)
    path[0] = u0
    path[1:], _ = lfilter([b], [1.0, -a], xi, zi=[a * u0])
    return path


def integrate_vdp_ou_batch(
    params: Sequence[VdpParams],
    dt: float,
    n_steps: int,
    rngs: Sequence[np.random.Generator],
    initial: tuple[float, float] = VDP_INITIAL,
    burn_in: float = 50.0,
) -> VdpSolution:
    """
    Integrate phi'' - gamma (1 - phi^2) phi' + phi + alpha u = 0 by AB3.

    The forcing u comes from ``ou_path`` (one generator per row) and is held
    constant over each fine step.

    Returns:
        VdpSolution with phi, velocity and u of shape (K, n_steps + 1).
    """
    if dt <= 0:
        raise UsageError(f"dt must be positive, got {dt}")
    if len(rngs) != len(params):
        raise UsageError("one generator per trajectory is required")

    k = len(params)
    gamma = np.array([p.gamma for p in params], dtype=np.float64)
    alpha = np.array([p.alpha for p in params], dtype=np.float64)
    n_burn = int(round(burn_in / dt))
    n_total = n_burn + n_steps

    u = np.stack([
        ou_path(p.theta, p.u_ref, dt, n_total, rng) for p, rng in zip(params, rngs)
    ])

    def f(t, x, u_now):
        pos, vel = x[:, 0], x[:, 1]
        acc = gamma * (1.0 - pos * pos) * vel - pos - alpha * u_now
        return np.stack([vel, acc], axis=1)

    state = np.empty((k, n_total + 1, 2), dtype=np.float64)
    x = np.tile(np.asarray(initial, dtype=np.float64), (k, 1))
    state[:, 0] = x
    integrator = AdamsBashforth3(dt, f)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_total):
            x = integrator.step(n * dt, x, u[:, n])
            state[:, n + 1] = x

    bad = first_nonfinite(state[..., 0])
    if bad is not None:
        row = int(np.nonzero(~np.isfinite(state[:, bad, 0]))[0][0])
        raise IntegrationDiverged(step=bad, trajectory=row)
    return VdpSolution(
        phi=state[:, n_burn:, 0].copy(),
        velocity=state[:, n_burn:, 1].copy(),
        u=u[:, n_burn:].copy(),
    )


def integrate_vdp_ou(
    params: VdpParams,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
    initial: tuple[float, float] = VDP_INITIAL,
    burn_in: float = 50.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-trajectory form; returns (phi, u) each of length n_steps + 1."""
    sol = integrate_vdp_ou_batch([params], dt, n_steps, [rng], initial, burn_in)
    return sol.phi[0], sol.u[0]

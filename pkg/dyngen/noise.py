import numpy as np

from config.errors import UsageError
from .dataset import Trajectory
from .mackey_glass import MgParams
from .vdp import VdpParams


def downsample_and_noise(
    phi: np.ndarray,
    u: np.ndarray | None,
    stride: int,
    sigma_eps: float,
    rng: np.random.Generator,
    params: MgParams | VdpParams | None = None,
    dt_sample: float = 1.0,
) -> Trajectory:
    """
    Keep every stride-th fine-grid point and add i.i.d. N(0, sigma_eps^2) to y.

    The forcing is never perturbed.
    """
    if stride < 1:
        raise UsageError(f"stride must be >= 1, got {stride}")
    if sigma_eps < 0:
        raise UsageError(f"sigma_eps must be >= 0, got {sigma_eps}")
    phi_s = np.asarray(phi, dtype=np.float64)[::stride]
    if phi_s.ndim == 1:
        phi_s = phi_s[:, None]
    noise = rng.standard_normal(phi_s.shape)
    y = phi_s + sigma_eps * noise
    u_s = None if u is None else np.asarray(u, dtype=np.float64)[::stride]
    return Trajectory(y=y, u=u_s, phi=phi_s, params=params, dt_sample=dt_sample)

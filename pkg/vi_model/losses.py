"""KL divergence, reparameterized sampling and the Gaussian reconstruction loss."""

from typing import NamedTuple

import numpy as np

from config.errors import UsageError
from nn import ShapeError
from nn.recurrent import RecurrentNet, Tape
from .models import PosteriorGaussian


class Reconstruction(NamedTuple):
    loss: np.ndarray        # (B,) L_y per window
    dmu: np.ndarray         # (T, M*B, d) adjoints of sum_b L_y
    dlog_sigma: np.ndarray  # (T, M*B, d)


def kl_gaussian(q: PosteriorGaussian, sigma_z: float = 1.0) -> np.ndarray:
    """KL(q || N(0, sigma_z^2 I)) summed over the last axis."""
    ratio = q.sigma_q / sigma_z
    per_dim = 0.5 * (q.sigma_q ** 2 + q.m_q ** 2) / sigma_z ** 2 - np.log(ratio) - 0.5
    return per_dim.sum(axis=-1)


def kl_per_dim(q: PosteriorGaussian, sigma_z: float = 1.0) -> np.ndarray:
    return 0.5 * ((q.m_q ** 2 + q.sigma_q ** 2) / sigma_z ** 2 - 1.0) - np.log(q.sigma_q / sigma_z)


def reparam_sample(
    q: PosteriorGaussian,
    m: int,
    rng: np.random.Generator | None = None,
    eps: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw z = m_q + sigma_q * eps for M samples.

    Returns (z, eps), both of shape (M, *m_q.shape). Passing ``eps`` freezes
    the noise so z is a deterministic function of (m_q, sigma_q).
    """
    if m < 1:
        raise UsageError(f"need at least one sample, got M={m}")
    shape = (m, *q.m_q.shape)
    if eps is None:
        eps = rng.standard_normal(shape)
    elif eps.shape != shape:
        raise ShapeError(f"eps has shape {eps.shape}, expected {shape}")
    return q.m_q + q.sigma_q * eps, eps


def gaussian_nll(mu: np.ndarray, log_sigma: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-element 0.5((y - mu)/sigma)^2 + log sigma."""
    return 0.5 * ((y - mu) * np.exp(-log_sigma)) ** 2 + log_sigma


def gaussian_nll_adjoints(mu: np.ndarray, log_sigma: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    inv_var = np.exp(-2.0 * log_sigma)
    resid = mu - y
    return resid * inv_var, 1.0 - resid * resid * inv_var


def decoder_inputs(y: np.ndarray, u: np.ndarray, z: np.ndarray | None) -> np.ndarray:
    """
    Teacher-forced inputs x_t = (y_t, u_t, z) for t = 0 .. T-1.

    y, u are windows of shape (T+1, B, .); z is (M, B, N_z) or None. The
    result stacks samples along the batch axis, row m*B + b.
    """
    xs = np.concatenate([y[:-1], u[:-1]], axis=-1)
    if z is None:
        return xs
    m, batch = z.shape[0], z.shape[1]
    steps = xs.shape[0]
    xs = np.broadcast_to(xs[:, None], (steps, m, batch, xs.shape[-1]))
    zs = np.broadcast_to(z[None], (steps, m, batch, z.shape[-1]))
    return np.concatenate([xs, zs], axis=-1).reshape(steps, m * batch, -1)


def reconstruction_loss(
    decoder: RecurrentNet,
    y: np.ndarray,
    u: np.ndarray,
    z: np.ndarray | None,
    tape: Tape | None = None,
) -> Reconstruction:
    """
    Monte Carlo L_y = (1/M) sum_m sum_t sum_i nll(y_t | decoder(z^m)).

    Args:
        decoder: Decoder (or baseline) network.
        y, u: Normalized window, shape (T+1, B, d) and (T+1, B, N_u).
        z: Latent samples (M, B, N_z), or None for the baseline.
        tape: Records the forward pass when gradients are needed.
    """
    if y.shape[0] < 2:
        raise UsageError("window needs at least two points")
    m = 1 if z is None else z.shape[0]
    batch = y.shape[1]
    xs = decoder_inputs(y, u, z)
    mu, log_sigma, _ = decoder.run(xs, tape=tape)
    target = np.broadcast_to(y[1:, None], (y.shape[0] - 1, m, batch, y.shape[-1]))
    target = target.reshape(y.shape[0] - 1, m * batch, -1)

    nll = gaussian_nll(mu, log_sigma, target)
    loss = nll.sum(axis=(0, 2)).reshape(m, batch).mean(axis=0)
    dmu, dls = gaussian_nll_adjoints(mu, log_sigma, target)
    return Reconstruction(loss=loss, dmu=dmu / m, dlog_sigma=dls / m)

"""One-step-ahead predictive distributions as Gaussian mixtures over z."""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from config.errors import UsageError
from vi_model import VIModel
from .quantiles import empirical_interval
from .spin_up import StepModel, model_input

DEFAULT_DRAWS = 1000


@dataclass(frozen=True)
class OneStepPrediction:
    """
    Mixture moments for y_1 .. y_{n-1}, shape (n-1, d).

    ``lower`` and ``upper`` map a level p to the inverse-empirical-CDF bounds
    of the mixture itself, estimated from draws of it.
    """
    mu: np.ndarray
    sigma: np.ndarray
    lower: dict[float, np.ndarray] = field(default_factory=dict)
    upper: dict[float, np.ndarray] = field(default_factory=dict)

    @property
    def levels(self) -> list[float]:
        return sorted(self.lower)


def mixture_moments(mu: np.ndarray, sigma: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Mean and std of an equal-weight Gaussian mixture along ``axis``.

    mu = mean_m mu_m,  sigma^2 = mean_m (mu_m^2 + sigma_m^2) - mu^2
    """
    mean = mu.mean(axis=axis)
    var = (sigma ** 2).mean(axis=axis) + ((mu - np.expand_dims(mean, axis)) ** 2).mean(axis=axis)
    return mean, np.sqrt(var)


def mixture_draws(mu: np.ndarray, sigma: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    n draws per step from equal-weight mixtures.

    mu, sigma are per-component (steps, M, d); returns (n, steps, d). Each
    draw picks its component uniformly, independently per step.
    """
    steps, m, d = mu.shape
    comp = rng.integers(0, m, size=(n, steps))
    rows = np.arange(steps)[None, :]
    eps = rng.standard_normal((n, steps, d))
    return mu[rows, comp] + sigma[rows, comp] * eps


def mixture_prediction(
    mu: np.ndarray,
    sigma: np.ndarray,
    levels: Sequence[float] = (),
    n_draws: int = DEFAULT_DRAWS,
    rng: np.random.Generator | None = None,
) -> OneStepPrediction:
    """Moments and empirical p-intervals of per-step mixtures with components (steps, M, d)."""
    mean, std = mixture_moments(mu, sigma, axis=1)
    lower, upper = {}, {}
    if levels:
        if rng is None:
            raise UsageError("mixture intervals need a random generator")
        if n_draws < 1:
            raise UsageError(f"need at least one mixture draw, got {n_draws}")
        draws = mixture_draws(mu, sigma, n_draws, rng)
        for p in levels:
            lower[p], upper[p] = empirical_interval(draws, p)
    return OneStepPrediction(mu=mean, sigma=std, lower=lower, upper=upper)


def teacher_forced(
    model: StepModel,
    y: np.ndarray,
    u: np.ndarray,
    z: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-component (mu, sigma) for steps 1 .. n-1, shape (n-1, S, d)."""
    if len(y) < 2:
        raise UsageError("one-step prediction needs at least two observations")
    rows = 1 if z is None else len(z)
    state = model.zero_state(rows)
    mus, sigmas = [], []
    for t in range(len(y) - 1):
        pred, state = model.step(model_input(y[t], u[t], z, rows), state)
        mus.append(pred.mu)
        sigmas.append(pred.sigma)
    return np.stack(mus), np.stack(sigmas)


def sample_latents(
    model: VIModel,
    y_hist: np.ndarray,
    u_hist: np.ndarray,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """n draws from q(z | Y_hist) for one history y_hist (tau+1, d)."""
    q = model.infer(y_hist[:, None], u_hist[:, None])
    eps = rng.standard_normal((n, model.n_z))
    return q.m_q[0] + q.sigma_q[0] * eps


def one_step_predict(
    model: VIModel | StepModel,
    y: np.ndarray,
    u: np.ndarray,
    tau: int,
    m: int,
    rng: np.random.Generator,
    levels: Sequence[float] = (),
    n_draws: int = DEFAULT_DRAWS,
) -> OneStepPrediction:
    """
    One-step-ahead predictions over a whole trajectory.

    For a VIModel, M latent samples come from q(z | Y_{0:tau}) and the
    decoder runs teacher-forced per sample; the components are combined as
    a mixture. A plain recurrent model yields its single Gaussian. For each
    level in ``levels`` the interval comes from ``n_draws`` mixture draws
    per step, taken from ``rng`` after the latent samples.
    """
    if isinstance(model, VIModel):
        if tau < 1 or tau >= len(y):
            raise UsageError(f"tau={tau} outside [1, {len(y) - 1}]")
        z = sample_latents(model, y[: tau + 1], u[: tau + 1], m, rng)
        mu, sigma = teacher_forced(model.decoder, y, u, z)
    else:
        mu, sigma = teacher_forced(model, y, u)
    return mixture_prediction(mu, sigma, levels, n_draws, rng)

"""Closed-loop Monte Carlo forecasting.

Sample paths are rolled out in fixed chunks; chunk c draws its latent
samples from stream (seed, *key, start, c, 0) and its observation noise
from (seed, *key, start, c, 1). Results therefore do not depend on how
chunks are scheduled across threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable
import logging

import numpy as np

from config.errors import UsageError
from dyngen import stream
from vi_model import VIModel
from .errors import ForecastDiverged
from .one_step import sample_latents
from .spin_up import StepModel, model_input, spin_up

logger = logging.getLogger(__name__)

CHUNK_SIZE = 100
LATENT_STREAM = 0
NOISE_STREAM = 1

LatentSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass
class ForecastEnsemble:
    """N_s sampled paths for steps start+1 .. start+T_f."""
    samples: np.ndarray   # (N_s, T_f, d)
    mu: np.ndarray        # per-step per-sample predictive mean
    sigma: np.ndarray     # per-step per-sample predictive std
    start: int
    seed: int
    z: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def horizon(self) -> int:
        return self.samples.shape[1]

    def truncated(self, steps: int) -> "ForecastEnsemble":
        return ForecastEnsemble(
            samples=self.samples[:, :steps],
            mu=self.mu[:, :steps],
            sigma=self.sigma[:, :steps],
            start=self.start,
            seed=self.seed,
            z=self.z,
        )


def _rollout(
    model: StepModel,
    y_hist: np.ndarray,
    u_hist: np.ndarray,
    u_future: np.ndarray,
    z: np.ndarray | None,
    n: int,
    horizon: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int | None]:
    d = y_hist.shape[-1]
    samples = np.full((n, horizon, d), np.nan)
    mu = np.full((n, horizon, d), np.nan)
    sigma = np.full((n, horizon, d), np.nan)

    ctx = spin_up(model, y_hist, u_hist, z, batch=n)
    pred, state = ctx.prediction, ctx.state
    for t in range(horizon):
        y_t = pred.mu + pred.sigma * rng.standard_normal((n, d))
        mu[:, t], sigma[:, t], samples[:, t] = pred.mu, pred.sigma, y_t
        if not np.isfinite(y_t).all():
            return samples, mu, sigma, t
        if t + 1 < horizon:
            pred, state = model.step(model_input(y_t, u_future[t], z, n), state)
    return samples, mu, sigma, None


def mc_forecast(
    model: StepModel,
    y_hist: np.ndarray,
    u_hist: np.ndarray,
    n_samples: int,
    horizon: int,
    seed: int,
    start: int = 0,
    u_future: np.ndarray | None = None,
    latent_sampler: LatentSampler | None = None,
    threads: int = 1,
    key: tuple[int, ...] = (),
) -> ForecastEnsemble:
    """
    Monte Carlo forecast from the history Y_{-tau:0}.

    Args:
        model: Decoder (with ``latent_sampler``) or baseline RNN.
        y_hist, u_hist: Observed history, (tau+1, d) and (tau+1, N_u).
        n_samples: Ensemble size N_s.
        horizon: Number of forecast steps T_f.
        seed: Master simulation seed.
        start: Index of the last observed point; keys the random streams.
        u_future: Forcing at steps 1 .. T_f-1, required when N_u > 0.
        latent_sampler: Draws (n, N_z) latent samples from a generator.
        threads: Worker cap; output is identical for any value.
        key: Extra stream path (e.g. the trajectory index) between seed and start.

    Raises:
        ForecastDiverged: A sample became non-finite; carries the completed steps.
    """
    if n_samples < 1 or horizon < 1:
        raise UsageError(f"need N_s >= 1 and horizon >= 1, got {n_samples}, {horizon}")
    n_u = u_hist.shape[-1]
    if u_future is None:
        if n_u > 0 and horizon > 1:
            raise UsageError("forcing must be supplied over the whole forecast horizon")
        u_future = np.zeros((max(horizon - 1, 0), n_u))
    elif len(u_future) < horizon - 1:
        raise UsageError(f"forcing covers {len(u_future)} steps, horizon needs {horizon - 1}")

    counts = [min(CHUNK_SIZE, n_samples - s) for s in range(0, n_samples, CHUNK_SIZE)]

    def run(c: int):
        n = counts[c]
        z = None
        if latent_sampler is not None:
            z = latent_sampler(stream(seed, *key, start, c, LATENT_STREAM), n)
        rng = stream(seed, *key, start, c, NOISE_STREAM)
        return (*_rollout(model, y_hist, u_hist, u_future, z, n, horizon, rng), z)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(counts))))
    else:
        parts = [run(c) for c in range(len(counts))]

    ensemble = ForecastEnsemble(
        samples=np.concatenate([p[0] for p in parts]),
        mu=np.concatenate([p[1] for p in parts]),
        sigma=np.concatenate([p[2] for p in parts]),
        start=start,
        seed=seed,
        z=None if latent_sampler is None else np.concatenate([p[4] for p in parts]),
    )
    bad = [p[3] for p in parts if p[3] is not None]
    if bad:
        step = min(bad)
        raise ForecastDiverged(step, ensemble.truncated(step))
    return ensemble


def forecast_model(
    model: VIModel | StepModel,
    y: np.ndarray,
    u: np.ndarray,
    start: int,
    tau: int,
    n_samples: int,
    horizon: int,
    seed: int,
    threads: int = 1,
    key: tuple[int, ...] = (),
) -> ForecastEnsemble:
    """
    Forecast one trajectory from index ``start``.

    The history is Y_{start-tau:start}; forcing is taken from the trajectory
    itself. VI models marginalize over z drawn from q(z | history).
    """
    if start - tau < 0:
        raise UsageError(f"start {start} leaves fewer than tau={tau} history steps")
    if start + horizon > len(y) - 1:
        raise UsageError(f"start {start} + horizon {horizon} exceeds trajectory length {len(y)}")
    y_hist, u_hist = y[start - tau: start + 1], u[start - tau: start + 1]
    u_future = u[start + 1: start + horizon]

    if isinstance(model, VIModel):
        def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
            return sample_latents(model, y_hist, u_hist, n, rng)

        return mc_forecast(
            model.decoder, y_hist, u_hist, n_samples, horizon, seed, start, u_future, sampler, threads, key
        )
    return mc_forecast(model, y_hist, u_hist, n_samples, horizon, seed, start, u_future, None, threads, key)

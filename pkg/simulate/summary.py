"""Tabular views of forecast ensembles and one-step predictions."""

from typing import Sequence

import numpy as np
import pandas as pd

from .forecast import ForecastEnsemble
from .one_step import OneStepPrediction, mixture_moments
from .quantiles import empirical_interval


def summarize_ensemble(ensemble: ForecastEnsemble, levels: Sequence[float] = ()) -> pd.DataFrame:
    """
    Per-step ensemble mean, std, mixture moments and empirical quantiles.

    Columns: t, dim, mean, std, mix_mu, mix_sigma, q025, q975 and
    q_lo_<p>, q_hi_<p> per level. mix_mu/mix_sigma are the moments of the
    Gaussian mixture over the per-path predictive distributions.
    """
    samples = ensemble.samples
    steps, d = samples.shape[1], samples.shape[2]
    t = np.repeat(ensemble.start + 1 + np.arange(steps), d)
    mix_mu, mix_sigma = mixture_moments(ensemble.mu, ensemble.sigma, axis=0)
    columns = {
        "t": t,
        "dim": np.tile(np.arange(d), steps),
        "mean": samples.mean(axis=0).ravel(),
        "std": samples.std(axis=0).ravel(),
        "mix_mu": mix_mu.ravel(),
        "mix_sigma": mix_sigma.ravel(),
    }
    lo, hi = empirical_interval(samples, 0.95)
    columns["q025"], columns["q975"] = lo.ravel(), hi.ravel()
    for p in levels:
        lo, hi = empirical_interval(samples, p)
        columns[f"q_lo_{p:g}"], columns[f"q_hi_{p:g}"] = lo.ravel(), hi.ravel()
    return pd.DataFrame(columns)


def ensemble_frame(ensemble: ForecastEnsemble) -> pd.DataFrame:
    """Long table t, sample_id, y_0 .. y_{d-1}."""
    n, steps, d = ensemble.samples.shape
    frame = pd.DataFrame(
        {
            "t": np.tile(ensemble.start + 1 + np.arange(steps), n),
            "sample_id": np.repeat(np.arange(n), steps),
        }
    )
    flat = ensemble.samples.reshape(n * steps, d)
    for i in range(d):
        frame[f"y_{i}"] = flat[:, i]
    return frame


def onestep_frame(pred: OneStepPrediction) -> pd.DataFrame:
    """Per-step mixture moments and the empirical lo_<p>/hi_<p> bounds carried by ``pred``."""
    steps, d = pred.mu.shape
    frame = pd.DataFrame(
        {
            "t": np.repeat(1 + np.arange(steps), d),
            "dim": np.tile(np.arange(d), steps),
            "mu": pred.mu.ravel(),
            "sigma": pred.sigma.ravel(),
        }
    )
    for p in pred.levels:
        frame[f"lo_{p:g}"] = pred.lower[p].ravel()
        frame[f"hi_{p:g}"] = pred.upper[p].ravel()
    return frame

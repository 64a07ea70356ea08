"""One-step and multi-step forecast metrics.

All inputs are in normalized units. One-step arrays are (K, steps, d) with
row t holding the prediction for, and the truth at, the same time index.
"""

from typing import Literal, Mapping, Sequence

import numpy as np

from config.errors import UsageError
from simulate import empirical_interval


def _window(array: np.ndarray, discard: int) -> np.ndarray:
    array = np.asarray(array, dtype=np.float64)
    if array.ndim == 2:
        array = array[..., None]
    return array[:, discard:]


def onestep_metrics(
    mu: np.ndarray,
    sigma: np.ndarray,
    phi: np.ndarray,
    y: np.ndarray,
    sigma_eps: float | np.ndarray,
    discard: int = 200,
    ll_denominator: Literal["var", "std"] = "var",
) -> dict[str, float]:
    """
    e_mu, e_sigma, LL and NLL of one-step predictions.

    Args:
        mu, sigma: Predictive mean and std, (K, steps, d).
        phi: Noiseless truth on the same grid.
        y: Observations on the same grid.
        sigma_eps: Observation noise std in normalized units (scalar or per dim).
        discard: Leading steps excluded from every average.
        ll_denominator: "var" divides the squared residual by sigma^2; "std"
            keeps the literal sigma.
    """
    mu, sigma, phi, y = (_window(a, discard) for a in (mu, sigma, phi, y))
    if mu.shape[1] < 1:
        raise UsageError(f"evaluation window is empty after discarding {discard} steps")
    var_phi = phi.var(axis=1, keepdims=True)
    if np.any(var_phi == 0):
        raise UsageError("ground truth has zero variance over the evaluation window")

    e_mu = float(np.sqrt(np.mean((mu - phi) ** 2 / var_phi)))
    e_sigma = float(np.sqrt(np.mean(mu.var(axis=1, keepdims=True) / var_phi)) - 1.0)

    denom = sigma ** 2 if ll_denominator == "var" else sigma
    ll = float(np.mean(-0.5 * (mu - y) ** 2 / denom - np.log(sigma)))
    perfect = -0.5 - float(np.mean(np.log(np.broadcast_to(sigma_eps, (mu.shape[-1],)))))
    return {"e_mu": e_mu, "e_sigma": e_sigma, "ll": ll, "nll": ll / perfect}


def coverage(
    ensembles: Sequence[np.ndarray],
    observations: Sequence[np.ndarray],
    levels: Sequence[float],
) -> dict[float, float]:
    """
    Empirical coverage CP_p of inverse-empirical-CDF intervals.

    Args:
        ensembles: Per test case, samples of shape (N_s, T, d).
        observations: Per test case, observed values (T, d).
        levels: Interval levels p in (0, 1).
    """
    if len(ensembles) != len(observations):
        raise UsageError(f"{len(ensembles)} ensembles for {len(observations)} observation series")
    inside = {p: 0 for p in levels}
    total = 0
    for samples, obs in zip(ensembles, observations):
        obs = np.asarray(obs).reshape(samples.shape[1:])
        total += obs.size
        for p in levels:
            lo, hi = empirical_interval(samples, p)
            inside[p] += int(np.count_nonzero((obs >= lo) & (obs <= hi)))
    if total == 0:
        raise UsageError("no observations to score")
    return {p: inside[p] / total for p in levels}


def interval_coverage(
    lower: Mapping[float, np.ndarray],
    upper: Mapping[float, np.ndarray],
    observations: np.ndarray,
    discard: int = 0,
) -> dict[float, float]:
    """
    CP_p of precomputed p-intervals, e.g. one-step bounds read back from CSV.

    Args:
        lower, upper: Per level p, bounds shaped like ``observations`` (K, steps, d).
        observations: Observed values on the same grid.
        discard: Leading steps excluded.
    """
    y = _window(observations, discard)
    if y.size == 0:
        raise UsageError("no observations to score")
    if set(lower) != set(upper):
        raise UsageError("lower and upper bounds cover different levels")
    out = {}
    for p in sorted(lower):
        lo, hi = _window(lower[p], discard), _window(upper[p], discard)
        if lo.shape != y.shape or hi.shape != y.shape:
            raise UsageError(f"interval bounds {lo.shape} do not match observations {y.shape}")
        out[p] = float(np.mean((y >= lo) & (y <= hi)))
    return out


def nmae_per_case(
    ensembles: Sequence[np.ndarray],
    truths: Sequence[np.ndarray],
    scales: Sequence[float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per test case NMAE and W_0.95 series, each (N_test, T_f)."""
    if not ensembles:
        raise UsageError("forecast metrics need at least one test case")
    if scales is None:
        scales = [float(np.std(truth)) for truth in truths]
    nmae, width = [], []
    for samples, truth, scale in zip(ensembles, truths, scales):
        truth = np.asarray(truth).reshape(samples.shape[1:])
        lo, hi = empirical_interval(samples, 0.95)
        nmae.append(np.abs(samples.mean(axis=0) - truth).mean(axis=-1) / scale)
        width.append((hi - lo).mean(axis=-1) / scale)
    return np.array(nmae), np.array(width)


def forecast_growth(
    ensembles: Sequence[np.ndarray],
    truths: Sequence[np.ndarray],
    scales: Sequence[float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-step NMAE(t) and W_0.95(t) averaged over test cases.

    Args:
        ensembles: Per test case, samples (N_s, T_f, d).
        truths: Per test case, noiseless phi over the horizon (T_f, d).
        scales: std(phi^k) of each whole trajectory; defaults to the std
            of the truth over the horizon.
    """
    nmae, width = nmae_per_case(ensembles, truths, scales)
    return nmae.mean(axis=0), width.mean(axis=0)

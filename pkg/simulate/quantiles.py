"""Central p-intervals from the inverse empirical CDF."""

import numpy as np


def interval_bounds(p: float) -> tuple[float, float]:
    return 0.5 * (1.0 - p), 0.5 * (1.0 + p)


def empirical_interval(samples: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Inverse empirical CDF at (1 -+ p)/2 along the sample axis."""
    lo, hi = interval_bounds(p)
    return (
        np.quantile(samples, lo, axis=0, method="inverted_cdf"),
        np.quantile(samples, hi, axis=0, method="inverted_cdf"),
    )

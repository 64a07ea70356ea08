"""Latent-space analysis of a trained posterior network."""

from dataclasses import dataclass, field
from typing import Mapping, Sequence
import logging

import numpy as np
from sklearn.decomposition import PCA

from config.errors import UsageError
from vi_model import PosteriorGaussian, VIModel, encode_prefixes, kl_per_dim

logger = logging.getLogger(__name__)


@dataclass
class LatentReport:
    corr_zz: np.ndarray
    dkl_per_dim: np.ndarray
    pca_eigs: np.ndarray
    zeta: np.ndarray
    corr_z_param: np.ndarray
    param_names: list[str]
    n_posteriors: int
    warnings: list[str] = field(default_factory=list)

    @property
    def n_z(self) -> int:
        return len(self.dkl_per_dim)

    @property
    def max_offdiag_corr(self) -> float:
        if self.n_z < 2:
            return 0.0
        off = np.abs(self.corr_zz - np.eye(self.n_z))
        return float(off.max())

    def active_dims(self, threshold: float = 0.1) -> int:
        return int(np.count_nonzero(self.dkl_per_dim > threshold))

    def to_dict(self) -> dict:
        return {
            "n_z": self.n_z,
            "n_posteriors": self.n_posteriors,
            "corr_zz": self.corr_zz.tolist(),
            "dkl_per_dim": self.dkl_per_dim.tolist(),
            "pca_eigs": self.pca_eigs.tolist(),
            "zeta": self.zeta.tolist(),
            "param_names": list(self.param_names),
            "corr_z_param": self.corr_z_param.tolist(),
            "max_offdiag_corr": self.max_offdiag_corr,
            "warnings": list(self.warnings),
        }


def pca_spectrum(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """
    PCA eigenvalues nu_j (descending) and cumulative ratios zeta_i.

    Returns zeta = 1 everywhere when the points have no variance.
    """
    n, dim = points.shape
    warnings = []
    nu = np.zeros(dim)
    if n >= 2 and np.any(points.var(axis=0) > 0):
        pca = PCA(n_components=min(n, dim))
        pca.fit(points)
        nu[: pca.n_components_] = np.clip(pca.explained_variance_, 0.0, None)
    if nu.sum() <= 0:
        warnings.append("posterior means have zero variance; PCA spectrum is degenerate")
        return nu, np.ones(dim), warnings
    zeta = np.cumsum(nu) / nu.sum()
    zeta = np.minimum(np.maximum.accumulate(zeta), 1.0)
    zeta[-1] = 1.0
    return nu, zeta, warnings


def safe_corrcoef(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Pearson correlation between the columns of a (and b); constant columns give 0."""
    b = a if b is None else b
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    sa = np.sqrt((ac ** 2).sum(axis=0))
    sb = np.sqrt((bc ** 2).sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = (ac.T @ bc) / np.outer(sa, sb)
    return np.nan_to_num(np.clip(corr, -1.0, 1.0), nan=0.0, posinf=0.0, neginf=0.0)


def default_timestamps(t: int, first: int = 200, count: int = 5) -> list[int]:
    """``count`` prefix lengths evenly spaced in [first, t]."""
    first = min(first, t)
    return sorted(set(int(round(s)) for s in np.linspace(first, t, count)))


def latent_analysis(
    model: VIModel,
    y: np.ndarray,
    u: np.ndarray,
    timestamps: Sequence[int],
    draws_per_q: int,
    rng: np.random.Generator,
    params: np.ndarray | None = None,
    param_names: Sequence[str] = (),
) -> LatentReport:
    """
    Pool q(z | Y_{0:t}) over trajectories and timestamps.

    Args:
        model: Trained VI model.
        y, u: Normalized trajectories, (N, T+1, d) and (N, T+1, N_u).
        timestamps: Prefix end indices t.
        draws_per_q: Samples drawn from each posterior for the correlations.
        rng: Source of the posterior draws.
        params: Ground-truth parameters (N, P), for the z-parameter correlation only.
        param_names: Names of the parameter columns.
    """
    if draws_per_q < 1:
        raise UsageError(f"draws_per_q must be >= 1, got {draws_per_q}")
    codes = encode_prefixes(model.encoder, y.transpose(1, 0, 2), u.transpose(1, 0, 2), timestamps)
    n_stamps, n_traj = codes.shape[0], codes.shape[1]
    q = model.posterior_from_code(codes.reshape(n_stamps * n_traj, -1))
    pooled = n_stamps * n_traj
    warnings = []
    if pooled < model.n_z:
        warnings.append(f"only {pooled} posteriors for N_z={model.n_z}; covariance is rank deficient")

    nu, zeta, pca_warnings = pca_spectrum(q.m_q)
    warnings += pca_warnings

    eps = rng.standard_normal((draws_per_q, pooled, model.n_z))
    z = (q.m_q + q.sigma_q * eps).reshape(-1, model.n_z)
    corr_zz = safe_corrcoef(z)
    np.fill_diagonal(corr_zz, 1.0)

    dkl = kl_per_dim(PosteriorGaussian(m_q=q.m_q, sigma_q=q.sigma_q), model.sigma_z).mean(axis=0)

    if params is not None and len(params):
        per_row = np.tile(np.asarray(params, dtype=np.float64), (n_stamps * draws_per_q, 1))
        corr_zp = safe_corrcoef(z, per_row)
    else:
        corr_zp = np.empty((model.n_z, 0))

    for message in warnings:
        logger.warning(message)
    return LatentReport(
        corr_zz=corr_zz,
        dkl_per_dim=dkl,
        pca_eigs=nu,
        zeta=zeta,
        corr_z_param=corr_zp,
        param_names=list(param_names),
        n_posteriors=pooled,
        warnings=warnings,
    )


def lambda_selection(corr_by_lambda: Mapping[float, np.ndarray], delta: float = 0.1) -> float | None:
    """
    Smallest lambda whose max off-diagonal |Cor(z, z)| is below ``delta``.

    Returns None when no lambda qualifies.
    """
    if not corr_by_lambda:
        raise UsageError("lambda_selection needs at least one correlation matrix")
    for lam in sorted(corr_by_lambda):
        corr = np.asarray(corr_by_lambda[lam])
        off = np.abs(corr - np.diag(np.diag(corr)))
        if off.max(initial=0.0) < delta:
            return lam
    return None

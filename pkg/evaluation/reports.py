"""Metric reports and their flat tabular forms."""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .latent import LatentReport


@dataclass
class MetricsReport:
    e_mu: float = float("nan")
    e_sigma: float = float("nan")
    ll: float = float("nan")
    nll: float = float("nan")
    cp: dict[float, float] = field(default_factory=dict)
    onestep_cp: dict[float, float] = field(default_factory=dict)
    nmae: np.ndarray = field(default_factory=lambda: np.empty(0))
    w95: np.ndarray = field(default_factory=lambda: np.empty(0))
    nmae_final_median: float = float("nan")
    n_test: int = 0
    horizon: int = 0

    def to_dict(self) -> dict:
        return {
            "e_mu": self.e_mu,
            "e_sigma": self.e_sigma,
            "ll": self.ll,
            "nll": self.nll,
            "cp": {f"{p:g}": v for p, v in self.cp.items()},
            "onestep_cp": {f"{p:g}": v for p, v in self.onestep_cp.items()},
            "nmae": self.nmae.tolist(),
            "w95": self.w95.tolist(),
            "nmae_final_median": self.nmae_final_median,
            "n_test": self.n_test,
            "horizon": self.horizon,
        }

    def scalar_frame(self) -> pd.DataFrame:
        """metric, value rows."""
        rows = [("e_mu", self.e_mu), ("e_sigma", self.e_sigma), ("ll", self.ll), ("nll", self.nll)]
        rows += [(f"cp_{p:g}", v) for p, v in self.cp.items()]
        rows += [(f"onestep_cp_{p:g}", v) for p, v in self.onestep_cp.items()]
        rows += [("n_test", self.n_test), ("horizon", self.horizon)]
        return pd.DataFrame(rows, columns=["metric", "value"])

    def growth_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": np.arange(1, len(self.nmae) + 1), "nmae": self.nmae, "w95": self.w95})


def latent_frames(report: LatentReport) -> dict[str, pd.DataFrame]:
    """Per-dimension KL, PCA spectrum and correlation tables."""
    dims = [f"z{i}" for i in range(report.n_z)]
    frames = {
        "latent_dims": pd.DataFrame(
            {
                "dim": np.arange(report.n_z),
                "dkl": report.dkl_per_dim,
                "pca_eig": report.pca_eigs,
                "zeta": report.zeta,
            }
        ),
        "corr_zz": pd.DataFrame(report.corr_zz, index=dims, columns=dims).rename_axis("dim").reset_index(),
    }
    if report.param_names:
        frames["corr_z_param"] = (
            pd.DataFrame(report.corr_z_param, index=dims, columns=report.param_names)
            .rename_axis("dim")
            .reset_index()
        )
    return frames

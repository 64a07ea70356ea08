from .rng import stream
from .errors import IntegrationDiverged, DegenerateDimension
from .mackey_glass import (
    MgParams,
    sample_mg_params,
    integrate_mackey_glass,
    integrate_mackey_glass_batch,
)
from .vdp import VdpParams, ou_path, sample_vdp_params, integrate_vdp_ou, integrate_vdp_ou_batch
from .dataset import Trajectory, NormStats, Dataset, normalize_dataset, first_split
from .noise import downsample_and_noise
from .base import BaseGenerator
from .systems import MackeyGlassGenerator, VdpGenerator, get_generator
from .storage import save_dataset, load_dataset

__all__ = [
    "stream",
    "IntegrationDiverged",
    "DegenerateDimension",
    "MgParams",
    "sample_mg_params",
    "integrate_mackey_glass",
    "integrate_mackey_glass_batch",
    "VdpParams",
    "ou_path",
    "sample_vdp_params",
    "integrate_vdp_ou",
    "integrate_vdp_ou_batch",
    "Trajectory",
    "NormStats",
    "Dataset",
    "normalize_dataset",
    "first_split",
    "downsample_and_noise",
    "BaseGenerator",
    "MackeyGlassGenerator",
    "VdpGenerator",
    "get_generator",
    "save_dataset",
    "load_dataset",
]

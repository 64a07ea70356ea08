"""Concrete generators and the system registry."""

from typing import Sequence

import numpy as np

from config.errors import UsageError
from .base import BaseGenerator
from .mackey_glass import MgParams, integrate_mackey_glass_batch, sample_mg_params
from .vdp import VdpParams, integrate_vdp_ou_batch, sample_vdp_params


class MackeyGlassGenerator(BaseGenerator):
    """Mackey-Glass trajectories sampled at dt=1 from an AB3 grid of 0.01."""

    system = "mackey_glass"
    obs_dim = 1
    forcing_dim = 0
    default_dt_fine = 0.01
    default_dt_sample = 1.0
    default_sigma_eps = 0.03
    default_burn_in = 300.0

    def sample_params(self, rng: np.random.Generator) -> MgParams:
        return sample_mg_params(rng)

    def params_from_values(self, values: Sequence[float]) -> MgParams:
        return MgParams.from_values(values)

    def integrate(self, params, n_steps, forcing_rngs):
        phi = integrate_mackey_glass_batch(params, self.dt_fine, n_steps, burn_in=self.burn_in)
        return phi, None


class VdpGenerator(BaseGenerator):
    """Forced Van der Pol trajectories sampled at dt=0.2 from an AB3 grid of 0.001."""

    system = "vdp"
    obs_dim = 1
    forcing_dim = 1
    default_dt_fine = 0.001
    default_dt_sample = 0.2
    default_sigma_eps = 0.075
    default_burn_in = 50.0

    def sample_params(self, rng: np.random.Generator) -> VdpParams:
        return sample_vdp_params(rng)

    def params_from_values(self, values: Sequence[float]) -> VdpParams:
        return VdpParams.from_values(values)

    def integrate(self, params, n_steps, forcing_rngs):
        sol = integrate_vdp_ou_batch(params, self.dt_fine, n_steps, forcing_rngs, burn_in=self.burn_in)
        return sol.phi, sol.u


GENERATORS: dict[str, type[BaseGenerator]] = {
    MackeyGlassGenerator.system: MackeyGlassGenerator,
    VdpGenerator.system: VdpGenerator,
}


def get_generator(system: str, **kwargs) -> BaseGenerator:
    """Instantiate the generator registered for ``system``."""
    key = system.replace("-", "_")
    if key not in GENERATORS:
        raise UsageError(f"Unknown system {system!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[key](**kwargs)


def params_type(system: str):
    return MgParams if system == MackeyGlassGenerator.system else VdpParams

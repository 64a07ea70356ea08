from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence
import logging

import numpy as np

from config.errors import UsageError
from .dataset import Trajectory
from .noise import downsample_and_noise
from .rng import stream

logger = logging.getLogger(__name__)

# Stream ids under (seed, trajectory index)
PARAM_STREAM = 0
FORCING_STREAM = 1
NOISE_STREAM = 2


class BaseGenerator(ABC):
    """Base class for all synthetic trajectory generators."""

    system: str = ""
    obs_dim: int = 1
    forcing_dim: int = 0
    default_dt_fine: float = 0.01
    default_dt_sample: float = 1.0
    default_sigma_eps: float = 0.0
    default_burn_in: float = 0.0

    def __init__(
        self,
        dt_fine: float | None = None,
        dt_sample: float | None = None,
        sigma_eps: float | None = None,
        burn_in: float | None = None,
        threads: int = 1,
        chunk_size: int = 25,
    ):
        self.dt_fine = dt_fine or self.default_dt_fine
        self.dt_sample = dt_sample or self.default_dt_sample
        self.sigma_eps = self.default_sigma_eps if sigma_eps is None else sigma_eps
        self.burn_in = self.default_burn_in if burn_in is None else burn_in
        self.threads = max(1, threads)
        self.chunk_size = chunk_size

        ratio = self.dt_sample / self.dt_fine
        self.stride = int(round(ratio))
        if self.stride < 1 or abs(ratio - self.stride) > 1e-9 * ratio:
            raise UsageError(
                f"dt_sample={self.dt_sample} is not an integer multiple of dt_fine={self.dt_fine}"
            )

    @abstractmethod
    def sample_params(self, rng: np.random.Generator):
        """Draw one parameter set from the system's prior ranges."""
        pass

    @abstractmethod
    def params_from_values(self, values: Sequence[float]):
        """Build a parameter set from an explicit tuple."""
        pass

    @abstractmethod
    def integrate(
        self,
        params: list,
        n_steps: int,
        forcing_rngs: list[np.random.Generator],
    ) -> tuple[np.ndarray, np.ndarray | None]:
        """
        Integrate a batch of trajectories on the fine grid.

        Returns:
            (phi, u) with shape (K, n_steps + 1); u is None without forcing.
        """
        pass

    def generate(
        self,
        k: int,
        t: int,
        seed: int,
        overrides: Sequence[Sequence[float]] = (),
    ) -> list[Trajectory]:
        """
        Generate K trajectories of T+1 observations.

        Trajectory i draws its parameters, forcing and noise from its own
        streams under (seed, i); the first len(overrides) trajectories use
        the explicit parameter tuples instead of sampled ones.
        """
        chunks = [list(range(s, min(s + self.chunk_size, k))) for s in range(0, k, self.chunk_size)]
        logger.info(
            f"Generating {k} {self.system} trajectories (T={t}, stride={self.stride}) "
            f"in {len(chunks)} chunks"
        )

        def run(indices: list[int]) -> list[Trajectory]:
            out = self._generate_chunk(indices, t, seed, overrides)
            logger.info(f"  trajectories {indices[0]}-{indices[-1]} done")
            return out

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(run, chunks))
        else:
            results = [run(c) for c in chunks]
        return [traj for chunk in results for traj in chunk]

    def _generate_chunk(
        self,
        indices: list[int],
        t: int,
        seed: int,
        overrides: Sequence[Sequence[float]],
    ) -> list[Trajectory]:
        params = []
        for i in indices:
            if i < len(overrides):
                params.append(self.params_from_values(overrides[i]))
            else:
                params.append(self.sample_params(stream(seed, i, PARAM_STREAM)))
        forcing_rngs = [stream(seed, i, FORCING_STREAM) for i in indices]
        phi, u = self.integrate(params, t * self.stride, forcing_rngs)
        return [
            downsample_and_noise(
                phi[row],
                None if u is None else u[row],
                self.stride,
                self.sigma_eps,
                stream(seed, i, NOISE_STREAM),
                params=params[row],
                dt_sample=self.dt_sample,
            )
            for row, i in enumerate(indices)
        ]

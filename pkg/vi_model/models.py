"""Encoder, posterior network and decoder.

The encoder and the baseline RNN share one architecture (input y|u); the
decoder takes y|u|z. Posterior and decoder parameters live in one flat
trainable buffer so a single ADAM state drives both.
"""

from dataclasses import dataclass

import numpy as np

from nn import ParameterLayout, PosteriorNet, RecurrentNet
from nn.feedforward import posterior_layout
from nn.recurrent import recurrent_layout


@dataclass(frozen=True)
class PosteriorGaussian:
    """Diagonal Gaussian q(z|Y)."""
    m_q: np.ndarray
    sigma_q: np.ndarray

    @property
    def log_sigma_q(self) -> np.ndarray:
        return np.log(self.sigma_q)

    @property
    def n_z(self) -> int:
        return self.m_q.shape[-1]


class EncoderModel(RecurrentNet):
    """Recurrent net over y|u; its final (h1, h2) is the encoder code."""

    @classmethod
    def create(cls, obs_dim: int, forcing_dim: int, n_c: int, rng: np.random.Generator | None = None):
        if rng is None:
            return cls(obs_dim + forcing_dim, n_c, obs_dim)
        return cls.initialized(obs_dim + forcing_dim, n_c, obs_dim, rng)

    @property
    def code_dim(self) -> int:
        return 2 * self.n_c


class DecoderModel(RecurrentNet):
    """Recurrent net over y|u|z. With n_z = 0 this is the baseline RNN."""

    def __init__(self, obs_dim: int, forcing_dim: int, n_z: int, n_c: int, params: np.ndarray | None = None):
        super().__init__(obs_dim + forcing_dim + n_z, n_c, obs_dim, params)
        self.obs_dim, self.forcing_dim, self.n_z = obs_dim, forcing_dim, n_z


class VIModel:
    """Frozen encoder plus trainable posterior network and decoder."""

    def __init__(
        self,
        encoder: EncoderModel,
        forcing_dim: int,
        n_z: int,
        width: int,
        depth: int = 3,
        sigma_z: float = 1.0,
        theta: np.ndarray | None = None,
    ):
        self.encoder = encoder
        self.obs_dim = encoder.d
        self.forcing_dim = forcing_dim
        self.n_z = n_z
        self.width, self.depth = width, depth
        self.sigma_z = sigma_z

        post = posterior_layout(encoder.code_dim, width, depth, n_z)
        dec = recurrent_layout(self.obs_dim + forcing_dim + n_z, encoder.n_c, self.obs_dim)
        self.layout = ParameterLayout.concat(post.prefixed("posterior"), dec.prefixed("decoder"))
        self.split = post.size
        self.theta = self.layout.zeros() if theta is None else theta
        self.posterior = PosteriorNet(encoder.code_dim, width, depth, n_z, self.theta[: self.split])
        self.decoder = DecoderModel(self.obs_dim, forcing_dim, n_z, encoder.n_c, self.theta[self.split:])

    @classmethod
    def initialized(
        cls,
        encoder: EncoderModel,
        forcing_dim: int,
        n_z: int,
        width: int,
        depth: int,
        sigma_z: float,
        rng: np.random.Generator,
    ) -> "VIModel":
        model = cls(encoder, forcing_dim, n_z, width, depth, sigma_z)
        post = PosteriorNet.initialized(encoder.code_dim, width, depth, n_z, rng)
        dec = DecoderModel(model.obs_dim, forcing_dim, n_z, encoder.n_c)
        dec_init = RecurrentNet.initialized(dec.n_x, dec.n_c, dec.d, rng)
        model.theta[: model.split] = post.params
        model.theta[model.split:] = dec_init.params
        return model

    def split_grad(self, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior and decoder slices of a buffer laid out like theta."""
        return grad[: self.split], grad[self.split:]

    def posterior_from_code(self, code: np.ndarray) -> PosteriorGaussian:
        m_q, log_sigma_q = self.posterior.forward(code)
        return PosteriorGaussian(m_q=m_q, sigma_q=np.exp(log_sigma_q))

    def infer(self, y: np.ndarray, u: np.ndarray) -> PosteriorGaussian:
        """q(z | Y) for histories y (T+1, B, d), u (T+1, B, N_u)."""
        code = self.encoder.encode(np.concatenate([y, u], axis=-1))
        return self.posterior_from_code(code)

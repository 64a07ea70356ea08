"""Feedforward posterior network.

    v_1 = relu(L_1(h_enc)), ..., v_N = relu(L_N(v_{N-1}))
    m_q = L_m(v_N),  log sigma_q = clamp(L_s(v_N))
"""

from typing import NamedTuple

import numpy as np

from .layers import (
    LinearParams,
    clamp_log_sigma,
    clamp_mask,
    linear_backward,
    linear_forward,
    relu,
    relu_backward,
)
from .params import ParameterLayout, uniform_init


class PosteriorCache(NamedTuple):
    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    last: np.ndarray
    ls_raw: np.ndarray


def posterior_layout(n_in: int, width: int, depth: int, n_z: int) -> ParameterLayout:
    entries = []
    fan_in = n_in
    for i in range(1, depth + 1):
        entries += LinearParams.entries(f"v{i}", fan_in, width)
        fan_in = width
    entries += LinearParams.entries("m", width, n_z)
    entries += LinearParams.entries("s", width, n_z)
    return ParameterLayout(entries)


class PosteriorNet:
    """Maps an encoder code to the diagonal Gaussian (m_q, log sigma_q)."""

    def __init__(self, n_in: int, width: int, depth: int, n_z: int, params: np.ndarray | None = None):
        self.n_in, self.width, self.depth, self.n_z = n_in, width, depth, n_z
        self.layout = posterior_layout(n_in, width, depth, n_z)
        self.params = self.layout.zeros() if params is None else params
        self.layers, self.m, self.s = self.bind(self.params)

    @classmethod
    def initialized(cls, n_in: int, width: int, depth: int, n_z: int, rng: np.random.Generator) -> "PosteriorNet":
        layout = posterior_layout(n_in, width, depth, n_z)
        return cls(n_in, width, depth, n_z, uniform_init(layout, rng))

    def bind(self, buf: np.ndarray) -> tuple[list[LinearParams], LinearParams, LinearParams]:
        views = self.layout.views(buf)
        layers = [LinearParams.from_views(views, f"v{i}") for i in range(1, self.depth + 1)]
        return layers, LinearParams.from_views(views, "m"), LinearParams.from_views(views, "s")

    def forward(self, code: np.ndarray, return_cache: bool = False):
        """code (B, n_in) -> m_q, log_sigma_q each (B, n_z)."""
        inputs, pre = [], []
        v = code
        for layer in self.layers:
            inputs.append(v)
            a = linear_forward(layer, v)
            pre.append(a)
            v = relu(a)
        m_q = linear_forward(self.m, v)
        ls_raw = linear_forward(self.s, v)
        log_sigma_q = clamp_log_sigma(ls_raw)
        if return_cache:
            return m_q, log_sigma_q, PosteriorCache(inputs, pre, v, ls_raw)
        return m_q, log_sigma_q

    def backward(
        self,
        cache: PosteriorCache,
        dm_q: np.ndarray,
        dlog_sigma_q: np.ndarray,
        grad_buf: np.ndarray,
    ) -> np.ndarray:
        """Accumulate parameter gradients into ``grad_buf``; returns d code."""
        glayers, gm, gs = self.bind(grad_buf)
        dv = linear_backward(self.m, cache.last, dm_q, gm)
        dv += linear_backward(self.s, cache.last, dlog_sigma_q * clamp_mask(cache.ls_raw), gs)
        for i in range(self.depth - 1, -1, -1):
            da = relu_backward(cache.pre[i], dv)
            dv = linear_backward(self.layers[i], cache.inputs[i], da, glayers[i])
        return dv

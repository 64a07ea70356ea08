"""Gated recurrent unit with explicit forward and reverse passes.

    p = sigmoid(W_px x + W_ph h + B_p)
    q = sigmoid(W_qx x + W_qh h + B_q)
    r = tanh(W_rx x + W_rh (q * h) + B_r)
    h' = (1 - p) * h + p * r
"""

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np
from scipy.special import expit as _sigmoid

from .errors import ShapeError


@dataclass
class GruCell:
    W_px: np.ndarray
    W_ph: np.ndarray
    B_p: np.ndarray
    W_qx: np.ndarray
    W_qh: np.ndarray
    B_q: np.ndarray
    W_rx: np.ndarray
    W_rh: np.ndarray
    B_r: np.ndarray

    @property
    def n_x(self) -> int:
        return self.W_px.shape[1]

    @property
    def n_h(self) -> int:
        return self.W_ph.shape[0]

    @staticmethod
    def entries(prefix: str, n_x: int, n_h: int) -> list[tuple[str, tuple[int, ...]]]:
        out = []
        for gate in ("p", "q", "r"):
            out += [
                (f"{prefix}.W_{gate}x", (n_h, n_x)),
                (f"{prefix}.W_{gate}h", (n_h, n_h)),
                (f"{prefix}.B_{gate}", (n_h,)),
            ]
        return out

    @classmethod
    def from_views(cls, views: dict[str, np.ndarray], prefix: str) -> "GruCell":
        return cls(**{f.name: views[f"{prefix}.{f.name}"] for f in fields(cls)})


class GruCache(NamedTuple):
    x: np.ndarray
    h: np.ndarray
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    qh: np.ndarray


def gru_cell_forward(cell: GruCell, x: np.ndarray, h: np.ndarray, return_cache: bool = False):
    """One GRU update; returns h_next (and the cache for gru_cell_backward)."""
    if x.shape[-1] != cell.n_x or h.shape[-1] != cell.n_h:
        raise ShapeError(
            f"GRU expects x dim {cell.n_x} and h dim {cell.n_h}, got {x.shape[-1]} and {h.shape[-1]}"
        )
    p = _sigmoid(x @ cell.W_px.T + h @ cell.W_ph.T + cell.B_p)
    q = _sigmoid(x @ cell.W_qx.T + h @ cell.W_qh.T + cell.B_q)
    qh = q * h
    r = np.tanh(x @ cell.W_rx.T + qh @ cell.W_rh.T + cell.B_r)
    h_next = (1.0 - p) * h + p * r
    if return_cache:
        return h_next, GruCache(x, h, p, q, r, qh)
    return h_next


def gru_cell_backward(
    cell: GruCell,
    cache: GruCache,
    dh_next: np.ndarray,
    grad: GruCell,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Reverse pass of one GRU update for batched (B, .) arrays.

    Accumulates parameter gradients into ``grad`` and returns (dx, dh).
    """
    x, h, p, q, r, qh = cache
    dp = dh_next * (r - h)
    dr = dh_next * p
    dh = dh_next * (1.0 - p)

    da_r = dr * (1.0 - r * r)
    grad.W_rx += da_r.T @ x
    grad.W_rh += da_r.T @ qh
    grad.B_r += da_r.sum(axis=0)
    dx = da_r @ cell.W_rx
    dqh = da_r @ cell.W_rh
    dh += dqh * q

    da_q = dqh * h * q * (1.0 - q)
    grad.W_qx += da_q.T @ x
    grad.W_qh += da_q.T @ h
    grad.B_q += da_q.sum(axis=0)
    dx += da_q @ cell.W_qx
    dh += da_q @ cell.W_qh

    da_p = dp * p * (1.0 - p)
    grad.W_px += da_p.T @ x
    grad.W_ph += da_p.T @ h
    grad.B_p += da_p.sum(axis=0)
    dx += da_p @ cell.W_px
    dh += da_p @ cell.W_ph
    return dx, dh

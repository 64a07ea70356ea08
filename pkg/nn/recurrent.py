"""Two-level GRU stack with a Gaussian output head.

    psi = relu(L_x(x_t))
    h1' = GRU_1(h1, psi)
    h2' = GRU_2(h2, h1')
    g   = relu(L_g(h2'))
    mu  = L_mu(g),  log sigma = clamp(L_sigma(g))

Arrays carry a leading batch axis (B, .) everywhere; ``RecurrentNet`` owns
one flat parameter buffer laid out by ``recurrent_layout``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from config.errors import UsageError
from .errors import ShapeError
from .gru import GruCache, GruCell, gru_cell_backward, gru_cell_forward
from .layers import (
    GaussianPrediction,
    LinearParams,
    clamp_log_sigma,
    clamp_mask,
    linear_backward,
    linear_forward,
    relu,
    relu_backward,
)
from .params import ParameterLayout, uniform_init


@dataclass
class GruStack:
    input_layer: LinearParams
    cell1: GruCell
    cell2: GruCell

    @property
    def n_c(self) -> int:
        return self.cell1.n_h

    @property
    def n_x(self) -> int:
        return self.input_layer.in_dim


@dataclass
class GaussianHead:
    g: LinearParams
    mu: LinearParams
    sigma: LinearParams


class State(NamedTuple):
    h1: np.ndarray
    h2: np.ndarray

    @property
    def code(self) -> np.ndarray:
        """Concatenated (h1, h2), length 2 N_c."""
        return np.concatenate([self.h1, self.h2], axis=-1)


class StepRecord(NamedTuple):
    x: np.ndarray
    a_in: np.ndarray
    c1: GruCache
    c2: GruCache
    h2: np.ndarray
    a_g: np.ndarray
    g: np.ndarray
    ls_raw: np.ndarray


class Tape:
    """Forward activations recorded per step for the reverse pass."""

    def __init__(self):
        self.records: list[StepRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: StepRecord) -> None:
        self.records.append(record)

    def clear(self) -> None:
        self.records.clear()


class BpttResult(NamedTuple):
    dx: np.ndarray
    dstate: State


def recurrent_layout(n_x: int, n_c: int, d: int) -> ParameterLayout:
    return ParameterLayout(
        LinearParams.entries("input", n_x, n_c)
        + GruCell.entries("gru1", n_c, n_c)
        + GruCell.entries("gru2", n_c, n_c)
        + LinearParams.entries("head.g", n_c, n_c)
        + LinearParams.entries("head.mu", n_c, d)
        + LinearParams.entries("head.sigma", n_c, d)
    )


def bind_recurrent(layout: ParameterLayout, buf: np.ndarray) -> tuple[GruStack, GaussianHead]:
    views = layout.views(buf)
    stack = GruStack(
        input_layer=LinearParams.from_views(views, "input"),
        cell1=GruCell.from_views(views, "gru1"),
        cell2=GruCell.from_views(views, "gru2"),
    )
    head = GaussianHead(
        g=LinearParams.from_views(views, "head.g"),
        mu=LinearParams.from_views(views, "head.mu"),
        sigma=LinearParams.from_views(views, "head.sigma"),
    )
    return stack, head


def rnn_step(
    stack: GruStack,
    head: GaussianHead,
    x_t: np.ndarray,
    state: State,
    tape: Tape | None = None,
) -> tuple[GaussianPrediction, State]:
    """Advance the stack by one input and emit the Gaussian prediction."""
    if x_t.shape[-1] != stack.n_x:
        raise ShapeError(f"input dim {x_t.shape[-1]} does not match configured {stack.n_x}")
    a_in = linear_forward(stack.input_layer, x_t)
    h1, c1 = gru_cell_forward(stack.cell1, relu(a_in), state.h1, return_cache=True)
    h2, c2 = gru_cell_forward(stack.cell2, h1, state.h2, return_cache=True)
    a_g = linear_forward(head.g, h2)
    g = relu(a_g)
    mu = linear_forward(head.mu, g)
    ls_raw = linear_forward(head.sigma, g)
    if tape is not None:
        tape.append(StepRecord(x_t, a_in, c1, c2, h2, a_g, g, ls_raw))
    return GaussianPrediction(mu=mu, log_sigma=clamp_log_sigma(ls_raw)), State(h1, h2)


def bptt_backward(
    stack: GruStack,
    head: GaussianHead,
    tape: Tape,
    dmu: np.ndarray,
    dlog_sigma: np.ndarray,
    grads: tuple[GruStack, GaussianHead],
    dstate: State | None = None,
) -> BpttResult:
    """
    Reverse pass through every recorded step.

    Args:
        dmu, dlog_sigma: Output adjoints, shape (T, B, d), aligned with the tape.
        grads: Stack and head bound to the gradient buffer; accumulated in place.
        dstate: Adjoint of the final hidden state (zero when omitted).

    Returns:
        Input adjoints (T, B, n_x) and the adjoint of the initial state.
    """
    if len(tape) == 0:
        raise UsageError("bptt_backward called on an empty tape")
    if len(dmu) != len(tape) or len(dlog_sigma) != len(tape):
        raise ShapeError(f"adjoints cover {len(dmu)} steps, tape has {len(tape)}")
    gstack, ghead = grads
    first = tape.records[0]
    batch = first.x.shape[0]
    if dstate is None:
        dh1 = np.zeros((batch, stack.n_c))
        dh2 = np.zeros((batch, stack.n_c))
    else:
        dh1, dh2 = dstate.h1.copy(), dstate.h2.copy()

    dx = np.empty((len(tape), batch, stack.n_x))
    for t in range(len(tape) - 1, -1, -1):
        rec = tape.records[t]
        dls_raw = dlog_sigma[t] * clamp_mask(rec.ls_raw)
        dg = linear_backward(head.mu, rec.g, dmu[t], ghead.mu)
        dg += linear_backward(head.sigma, rec.g, dls_raw, ghead.sigma)
        dh2 = dh2 + linear_backward(head.g, rec.h2, relu_backward(rec.a_g, dg), ghead.g)
        dh1_in, dh2 = gru_cell_backward(stack.cell2, rec.c2, dh2, gstack.cell2)
        dpsi, dh1 = gru_cell_backward(stack.cell1, rec.c1, dh1 + dh1_in, gstack.cell1)
        dx[t] = linear_backward(stack.input_layer, rec.x, relu_backward(rec.a_in, dpsi), gstack.input_layer)
    return BpttResult(dx=dx, dstate=State(dh1, dh2))


class RecurrentNet:
    """A GruStack plus Gaussian head over one flat parameter buffer.

    Used for the encoder (input y|u), the decoder (y|u|z) and the baseline
    (decoder with no latent input).
    """

    def __init__(self, n_x: int, n_c: int, d: int, params: np.ndarray | None = None):
        self.n_x, self.n_c, self.d = n_x, n_c, d
        self.layout = recurrent_layout(n_x, n_c, d)
        self.params = self.layout.zeros() if params is None else params
        self.stack, self.head = bind_recurrent(self.layout, self.params)

    @classmethod
    def initialized(cls, n_x: int, n_c: int, d: int, rng: np.random.Generator) -> "RecurrentNet":
        layout = recurrent_layout(n_x, n_c, d)
        return cls(n_x, n_c, d, uniform_init(layout, rng))

    def bind(self, buf: np.ndarray) -> tuple[GruStack, GaussianHead]:
        """Stack and head views over another buffer with this layout (e.g. gradients)."""
        return bind_recurrent(self.layout, buf)

    def zero_state(self, batch: int) -> State:
        return State(np.zeros((batch, self.n_c)), np.zeros((batch, self.n_c)))

    def step(self, x_t: np.ndarray, state: State, tape: Tape | None = None):
        return rnn_step(self.stack, self.head, x_t, state, tape)

    def run(
        self,
        xs: np.ndarray,
        state: State | None = None,
        tape: Tape | None = None,
    ) -> tuple[np.ndarray, np.ndarray, State]:
        """
        Teacher-forced pass over inputs xs of shape (T, B, n_x).

        Returns mu and log_sigma of shape (T, B, d) and the final state.
        """
        steps, batch = xs.shape[0], xs.shape[1]
        if state is None:
            state = self.zero_state(batch)
        mu = np.empty((steps, batch, self.d))
        log_sigma = np.empty((steps, batch, self.d))
        for t in range(steps):
            pred, state = self.step(xs[t], state, tape)
            mu[t], log_sigma[t] = pred.mu, pred.log_sigma
        return mu, log_sigma, state

    def encode(self, xs: np.ndarray) -> np.ndarray:
        """Hidden code (h1|h2) after consuming all of xs (T, B, n_x) from h0 = 0."""
        state = self.zero_state(xs.shape[1])
        for t in range(xs.shape[0]):
            _, state = self.step(xs[t], state)
        return state.code

    def backward(
        self,
        tape: Tape,
        dmu: np.ndarray,
        dlog_sigma: np.ndarray,
        grad_buf: np.ndarray,
        dstate: State | None = None,
    ) -> BpttResult:
        return bptt_backward(self.stack, self.head, tape, dmu, dlog_sigma, self.bind(grad_buf), dstate)

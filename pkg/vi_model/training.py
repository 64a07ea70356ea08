"""Encoder/baseline regression training and joint variational training.

All three runs share one optimization loop: minibatches of windows drawn
with replacement, ADAM with cosine decay, validation on fixed windows every
``eval_interval`` iterations and the best-validation parameters kept.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence
import logging

import numpy as np
import pandas as pd

from config.errors import UsageError
from config.run_config import RunConfig, TrainConfig
from dyngen import Dataset, stream
from nn.recurrent import RecurrentNet, Tape
from optim import AdamState, LrSchedule, PoisonedGradient, adam_step, cosine_lr
from .errors import TrainingFailure
from .losses import kl_gaussian, reconstruction_loss, reparam_sample
from .models import DecoderModel, EncoderModel, PosteriorGaussian, VIModel
from .windows import WindowSource, sample_windows

logger = logging.getLogger(__name__)

# Stream ids under (train seed, run kind, purpose[, iteration])
RUN_STREAMS = {"encoder": 0, "baseline": 1, "vi": 2}
INIT_STREAM = 0
WINDOW_STREAM = 1
NOISE_STREAM = 2
VAL_WINDOW_STREAM = 3
VAL_NOISE_STREAM = 4

LOG_COLUMNS = ["iter", "lr", "loss", "L_q", "L_y", "val_loss"]


class LossParts(NamedTuple):
    """Minibatch means of the total loss and its two terms."""
    loss: float
    l_q: float
    l_y: float


@dataclass
class TrainingResult:
    log: pd.DataFrame
    best_val: float
    best_iteration: int
    iterations: int


# ── Loss and gradient ────────────────────────────────────────


def regression_gradient(net: RecurrentNet, y: np.ndarray, u: np.ndarray, need_grad: bool = True):
    """Mean over windows of the one-step Gaussian NLL summed over t, and its gradient."""
    tape = Tape() if need_grad else None
    rec = reconstruction_loss(net, y, u, None, tape)
    loss = float(rec.loss.mean())
    parts = LossParts(loss=loss, l_q=0.0, l_y=loss)
    if not need_grad:
        return parts, None
    batch = y.shape[1]
    grad = net.layout.zeros()
    net.backward(tape, rec.dmu / batch, rec.dlog_sigma / batch, grad)
    return parts, grad


def vi_loss(model: VIModel, y: np.ndarray, u: np.ndarray, eps: np.ndarray, lam: float) -> LossParts:
    """lambda * L_q + L_y averaged over windows, with frozen noise ``eps`` (M, B, N_z)."""
    parts, _ = vi_gradient(model, y, u, eps, lam, need_grad=False)
    return parts


def vi_gradient(
    model: VIModel,
    y: np.ndarray,
    u: np.ndarray,
    eps: np.ndarray,
    lam: float,
    need_grad: bool = True,
) -> tuple[LossParts, np.ndarray | None]:
    """
    Loss of the regularized ELBO and its gradient over the trainable buffer.

    Args:
        model: Encoder (frozen), posterior network and decoder.
        y, u: Normalized windows (T+1, B, .); q is conditioned on the same window.
        eps: Standard normal draws for the reparameterized samples.
        lam: KL penalty.

    Returns:
        LossParts and a gradient laid out like ``model.theta``.
    """
    batch = y.shape[1]
    code = model.encoder.encode(np.concatenate([y, u], axis=-1))
    m_q, log_sigma_q, cache = model.posterior.forward(code, return_cache=True)
    q = PosteriorGaussian(m_q=m_q, sigma_q=np.exp(log_sigma_q))
    z, eps = reparam_sample(q, eps.shape[0], eps=eps)

    tape = Tape() if need_grad else None
    rec = reconstruction_loss(model.decoder, y, u, z, tape)
    kl = kl_gaussian(q, model.sigma_z)
    l_q, l_y = float(kl.mean()), float(rec.loss.mean())
    parts = LossParts(loss=float(np.mean(lam * kl + rec.loss)), l_q=l_q, l_y=l_y)
    if not need_grad:
        return parts, None

    grad = model.layout.zeros()
    g_post, g_dec = model.split_grad(grad)
    back = model.decoder.backward(tape, rec.dmu / batch, rec.dlog_sigma / batch, g_dec)
    n_yu = model.obs_dim + model.forcing_dim
    m = eps.shape[0]
    dz = back.dx[..., n_yu:].sum(axis=0).reshape(m, batch, model.n_z)

    var_z = model.sigma_z ** 2
    dm_q = lam * m_q / var_z / batch + dz.sum(axis=0)
    dlog_sigma_q = lam * (q.sigma_q ** 2 / var_z - 1.0) / batch + q.sigma_q * (eps * dz).sum(axis=0)
    model.posterior.backward(cache, dm_q, dlog_sigma_q, g_post)
    return parts, grad


def vi_train_step(
    model: VIModel,
    y: np.ndarray,
    u: np.ndarray,
    lam: float,
    mc_samples: int,
    rng: np.random.Generator,
) -> tuple[LossParts, np.ndarray]:
    """Fresh reparameterization noise, then the assembled gradient."""
    eps = rng.standard_normal((mc_samples, y.shape[1], model.n_z))
    return vi_gradient(model, y, u, eps, lam)


# ── Optimization loop ────────────────────────────────────────


def _optimize(
    params: np.ndarray,
    compute: Callable[[int], tuple[LossParts, np.ndarray]],
    validate: Callable[[], float],
    cfg: TrainConfig,
    label: str,
) -> TrainingResult:
    sched = LrSchedule(xi_min=cfg.xi_min, xi_max=cfg.xi_max, total=cfg.iterations)
    state = AdamState.zeros(params.size, cfg.beta1, cfg.beta2, cfg.eps)
    best = params.copy()
    best_val, best_iteration = np.inf, 0
    val = np.nan
    rows = []

    logger.info(f"Training {label}: {cfg.iterations} iterations, {params.size} parameters")
    for it in range(cfg.iterations):
        rate = cosine_lr(it, sched)
        parts, grad = compute(it)
        if not np.isfinite(parts.loss):
            raise TrainingFailure(it, f"loss is {parts.loss}")
        try:
            adam_step(params, grad, state, rate, cfg.clip)
        except PoisonedGradient as e:
            raise TrainingFailure(it, str(e)) from e

        done = it + 1
        if done % cfg.eval_interval == 0 or done == cfg.iterations:
            val = validate()
            if not np.isfinite(val):
                raise TrainingFailure(it, f"validation loss is {val}")
            if val < best_val:
                best_val, best_iteration = val, done
                best[:] = params
        if done % cfg.log_interval == 0 or done == cfg.iterations:
            rows.append(
                {"iter": done, "lr": rate, "loss": parts.loss, "L_q": parts.l_q, "L_y": parts.l_y, "val_loss": val}
            )
            logger.info(f"  [{label}] iter {done}: lr={rate:.3e} loss={parts.loss:.5f} val={val:.5f}")

    params[:] = best
    logger.info(f"Finished {label}: best validation {best_val:.5f} at iteration {best_iteration}")
    return TrainingResult(
        log=pd.DataFrame(rows, columns=LOG_COLUMNS),
        best_val=float(best_val),
        best_iteration=best_iteration,
        iterations=cfg.iterations,
    )


def _validation_windows(source: WindowSource, cfg: TrainConfig, kind: int) -> tuple[np.ndarray, np.ndarray]:
    if not source.val_indices:
        raise UsageError("dataset has no validation trajectories")
    traj, start = sample_windows(
        source.val_indices, cfg.val_windows, cfg.seq_len + 1, source.length, stream(cfg.seed, kind, VAL_WINDOW_STREAM)
    )
    return source.gather(traj, start, cfg.seq_len + 1)


def train_regression(source: WindowSource, net: RecurrentNet, cfg: TrainConfig, kind: str) -> TrainingResult:
    """Standard one-step NLL training, shared by the encoder and the baseline RNN."""
    run = RUN_STREAMS[kind]
    n_points = cfg.seq_len + 1
    val_y, val_u = _validation_windows(source, cfg, run)

    def compute(it: int):
        rng = stream(cfg.seed, run, WINDOW_STREAM, it)
        traj, start = sample_windows(source.train_indices, cfg.batch, n_points, source.length, rng)
        y, u = source.gather(traj, start, n_points)
        return regression_gradient(net, y, u)

    def validate() -> float:
        return regression_gradient(net, val_y, val_u, need_grad=False)[0].loss

    return _optimize(net.params, compute, validate, cfg, kind)


def train_encoder(dataset: Dataset, config: RunConfig) -> tuple[EncoderModel, TrainingResult]:
    cfg = config.train
    encoder = EncoderModel.create(
        dataset.obs_dim, dataset.forcing_dim, config.model.n_c, stream(cfg.seed, RUN_STREAMS["encoder"], INIT_STREAM)
    )
    result = train_regression(WindowSource.from_dataset(dataset), encoder, cfg, "encoder")
    return encoder, result


def train_baseline(dataset: Dataset, config: RunConfig) -> tuple[DecoderModel, TrainingResult]:
    """The baseline RNN: decoder architecture with no latent input."""
    cfg = config.train
    init = RecurrentNet.initialized(
        dataset.obs_dim + dataset.forcing_dim,
        config.model.n_c,
        dataset.obs_dim,
        stream(cfg.seed, RUN_STREAMS["baseline"], INIT_STREAM),
    )
    baseline = DecoderModel(dataset.obs_dim, dataset.forcing_dim, 0, config.model.n_c, init.params)
    result = train_regression(WindowSource.from_dataset(dataset), baseline, cfg, "baseline")
    return baseline, result


def train_vi(
    dataset: Dataset,
    encoder: EncoderModel,
    config: RunConfig,
    lam: float | None = None,
) -> tuple[VIModel, TrainingResult]:
    """Train the posterior network and decoder with the encoder frozen."""
    cfg = config.train
    lam = cfg.lambda_ if lam is None else lam
    if encoder.d != dataset.obs_dim or encoder.n_x != dataset.obs_dim + dataset.forcing_dim:
        raise UsageError(f"encoder input dim {encoder.n_x} does not fit dataset (d={dataset.obs_dim})")
    run = RUN_STREAMS["vi"]
    model = VIModel.initialized(
        encoder,
        dataset.forcing_dim,
        config.model.n_z,
        config.model.resolved_posterior_width,
        config.model.posterior_layers,
        cfg.sigma_z,
        stream(cfg.seed, run, INIT_STREAM),
    )
    source = WindowSource.from_dataset(dataset)
    n_points = cfg.seq_len + 1
    val_y, val_u = _validation_windows(source, cfg, run)
    val_eps = stream(cfg.seed, run, VAL_NOISE_STREAM).standard_normal((cfg.mc_samples, cfg.val_windows, model.n_z))

    def compute(it: int):
        traj, start = sample_windows(
            source.train_indices, cfg.batch, n_points, source.length, stream(cfg.seed, run, WINDOW_STREAM, it)
        )
        y, u = source.gather(traj, start, n_points)
        return vi_train_step(model, y, u, lam, cfg.mc_samples, stream(cfg.seed, run, NOISE_STREAM, it))

    def validate() -> float:
        return vi_loss(model, val_y, val_u, val_eps, lam).loss

    result = _optimize(model.theta, compute, validate, cfg, f"vi lambda={lam:g}")
    return model, result


# ── Inference helpers ────────────────────────────────────────


def encode_prefixes(encoder: EncoderModel, y: np.ndarray, u: np.ndarray, stamps: Sequence[int]) -> np.ndarray:
    """
    Encoder codes for the prefixes Y_{0:t}, t in ``stamps``.

    y, u are time-major (T+1, B, .). Returns (len(stamps), B, 2 N_c).
    """
    stamps = [int(t) for t in stamps]
    if not stamps:
        raise UsageError("no timestamps requested")
    if min(stamps) < 0 or max(stamps) >= y.shape[0]:
        raise UsageError(f"timestamps must lie in [0, {y.shape[0] - 1}]")
    wanted: dict[int, list[int]] = {}
    for pos, t in enumerate(stamps):
        wanted.setdefault(t, []).append(pos)

    xs = np.concatenate([y, u], axis=-1)
    codes = np.empty((len(stamps), y.shape[1], encoder.code_dim))
    state = encoder.zero_state(y.shape[1])
    for t in range(max(stamps) + 1):
        _, state = encoder.step(xs[t], state)
        for pos in wanted.get(t, ()):
            codes[pos] = state.code
    return codes


def posterior_trajectory(model: VIModel, y: np.ndarray, u: np.ndarray, t_max: int) -> PosteriorGaussian:
    """q(z | Y_{0:t}) for t = 0 .. t_max of one trajectory y (n, d), u (n, N_u)."""
    codes = encode_prefixes(model.encoder, y[:, None], u[:, None], range(t_max + 1))
    return model.posterior_from_code(codes[:, 0])

import numpy as np
import pytest

from config.errors import UsageError
from dyngen import stream
from nn import ShapeError, Tape
from vi_model import (
    EncoderModel,
    PosteriorGaussian,
    TrainingFailure,
    VIModel,
    WindowSource,
    encode_prefixes,
    gaussian_nll,
    gaussian_nll_adjoints,
    kl_gaussian,
    kl_per_dim,
    posterior_trajectory,
    reconstruction_loss,
    reparam_sample,
    sample_windows,
    train_encoder,
    train_regression,
    train_vi,
    vi_gradient,
    vi_loss,
    vi_train_step,
)
from vi_model.losses import decoder_inputs
from vi_model.training import LOG_COLUMNS


def _tiny_vi(rng, n_c=8, n_z=2, d=1, n_u=1, width=6):
    encoder = EncoderModel.create(d, n_u, n_c, rng)
    return VIModel.initialized(encoder, n_u, n_z, width, 3, 1.0, rng)


def _window(rng, steps=10, batch=2, d=1, n_u=1):
    y = rng.uniform(-0.5, 0.5, (steps + 1, batch, d))
    u = rng.uniform(-0.5, 0.5, (steps + 1, batch, n_u))
    return y, u


# ── KL and sampling ──────────────────────────────────────────


def test_kl_closed_form_examples():
    assert kl_gaussian(PosteriorGaussian(np.zeros(3), np.full(3, 2.0)), sigma_z=2.0) == pytest.approx(0.0, abs=1e-15)
    assert kl_gaussian(PosteriorGaussian(np.array([1.0]), np.array([1.0]))) == pytest.approx(0.5)


def test_kl_per_dim_sums_to_total(rng):
    q = PosteriorGaussian(rng.standard_normal((4, 3)), np.exp(rng.standard_normal((4, 3))))
    np.testing.assert_allclose(kl_per_dim(q, 0.7).sum(axis=-1), kl_gaussian(q, 0.7), rtol=1e-12)


def test_kl_matches_monte_carlo(rng):
    n = 10**6
    sigma_z = 1.0
    for _ in range(20):
        m_q = rng.uniform(-2, 2)
        sigma_q = np.exp(rng.uniform(-1.5, 1.0))
        eps = rng.standard_normal(n)
        z = m_q + sigma_q * eps
        log_ratio = -0.5 * eps ** 2 - np.log(sigma_q) + 0.5 * (z / sigma_z) ** 2 + np.log(sigma_z)
        se = log_ratio.std() / np.sqrt(n)
        exact = kl_gaussian(PosteriorGaussian(np.array([m_q]), np.array([sigma_q])), sigma_z)
        assert abs(log_ratio.mean() - exact) < 4 * se


def test_zero_sigma_samples_equal_mean(rng):
    q = PosteriorGaussian(np.array([[0.3, -1.0]]), np.zeros((1, 2)))
    z, _ = reparam_sample(q, 5, rng)
    np.testing.assert_array_equal(z, np.broadcast_to(q.m_q, (5, 1, 2)))


def test_sample_mean_concentrates(rng):
    q = PosteriorGaussian(np.array([0.5, -2.0]), np.array([0.1, 3.0]))
    n = 10**5
    z, eps = reparam_sample(q, n, rng)
    assert eps.shape == (n, 2)
    assert np.all(np.abs(z.mean(axis=0) - q.m_q) < 4 * q.sigma_q / np.sqrt(n))


def test_frozen_noise_and_bad_shapes(rng):
    q = PosteriorGaussian(np.zeros((2, 3)), np.ones((2, 3)))
    eps = rng.standard_normal((4, 2, 3))
    z, same = reparam_sample(q, 4, eps=eps)
    assert same is eps
    np.testing.assert_array_equal(z, eps)
    with pytest.raises(ShapeError):
        reparam_sample(q, 4, eps=eps[:, :1])
    with pytest.raises(UsageError):
        reparam_sample(q, 0, rng)


# ── reconstruction loss ──────────────────────────────────────


def test_perfect_decoder_has_zero_loss():
    encoder = EncoderModel.create(1, 0, 3)
    model = VIModel(encoder, 0, 2, 4)
    y = np.zeros((6, 2, 1))
    u = np.zeros((6, 2, 0))
    rec = reconstruction_loss(model.decoder, y, u, np.ones((3, 2, 2)))
    np.testing.assert_array_equal(rec.loss, 0.0)


def test_single_sample_is_one_decoder_pass(rng):
    model = _tiny_vi(rng)
    y, u = _window(rng)
    z = rng.standard_normal((1, 2, 2))
    rec = reconstruction_loss(model.decoder, y, u, z)
    mu, log_sigma, _ = model.decoder.run(decoder_inputs(y, u, z))
    expected = gaussian_nll(mu, log_sigma, y[1:]).sum(axis=(0, 2))
    np.testing.assert_allclose(rec.loss, expected, rtol=1e-13)


def test_nll_adjoints_match_symbolic(rng):
    mu, log_sigma, y = rng.standard_normal((3, 5))
    dmu, dls = gaussian_nll_adjoints(mu, log_sigma, y)
    sigma2 = np.exp(2 * log_sigma)
    np.testing.assert_allclose(dmu, (mu - y) / sigma2, rtol=1e-13)
    np.testing.assert_allclose(dls, 1 - (mu - y) ** 2 / sigma2, rtol=1e-13)
    h = 1e-6
    numeric = (gaussian_nll(mu + h, log_sigma, y) - gaussian_nll(mu - h, log_sigma, y)) / (2 * h)
    np.testing.assert_allclose(dmu, numeric, rtol=1e-6, atol=1e-9)


def test_reconstruction_rejects_short_window():
    model = VIModel(EncoderModel.create(1, 0, 2), 0, 1, 3)
    with pytest.raises(UsageError):
        reconstruction_loss(model.decoder, np.zeros((1, 1, 1)), np.zeros((1, 1, 0)), np.zeros((1, 1, 1)))


# ── assembled gradient ───────────────────────────────────────


def test_vi_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    model = _tiny_vi(rng)
    y, u = _window(rng)
    eps = rng.standard_normal((4, 2, 2))
    lam = 0.7

    parts, grad = vi_gradient(model, y, u, eps, lam)
    numeric = np.zeros_like(grad)
    h = 1e-5
    for i in range(model.theta.size):
        old = model.theta[i]
        model.theta[i] = old + h
        up = vi_loss(model, y, u, eps, lam).loss
        model.theta[i] = old - h
        down = vi_loss(model, y, u, eps, lam).loss
        model.theta[i] = old
        numeric[i] = (up - down) / (2 * h)

    tol = np.maximum(1e-4 * np.abs(grad), 1e-8)
    worst = int(np.argmax(np.abs(grad - numeric) - tol))
    assert np.all(np.abs(grad - numeric) <= tol), f"worst coordinate {worst}: {grad[worst]} vs {numeric[worst]}"
    assert parts.loss == pytest.approx(vi_loss(model, y, u, eps, lam).loss, rel=1e-15)


def test_loss_decomposes_into_kl_and_reconstruction(rng):
    model = _tiny_vi(rng)
    y, u = _window(rng)
    parts = vi_loss(model, y, u, rng.standard_normal((3, 2, 2)), 2.5)
    assert parts.loss == pytest.approx(2.5 * parts.l_q + parts.l_y, abs=1e-10)


def test_kl_gradient_vanishes_at_prior(rng):
    model = _tiny_vi(rng)
    for name in ("m.W", "m.b", "s.W", "s.b"):
        model.posterior.layout.views(model.posterior.params)[name][...] = 0.0
    y, u = _window(rng)
    eps = rng.standard_normal((3, 2, 2))
    _, with_kl = vi_gradient(model, y, u, eps, 50.0)
    _, without = vi_gradient(model, y, u, eps, 0.0)
    np.testing.assert_allclose(with_kl, without, rtol=0, atol=1e-14)


def test_decoder_gradient_is_average_of_sample_passes(rng):
    model = _tiny_vi(rng)
    y, u = _window(rng)
    m, batch = 3, y.shape[1]
    eps = rng.standard_normal((m, batch, 2))
    _, grad = vi_gradient(model, y, u, eps, 1.0)
    _, g_dec = model.split_grad(grad)

    q = model.infer(y, u)
    z = q.m_q + q.sigma_q * eps
    expected = np.zeros_like(g_dec)
    for k in range(m):
        tape = Tape()
        rec = reconstruction_loss(model.decoder, y, u, z[k: k + 1], tape)
        single = model.decoder.layout.zeros()
        model.decoder.backward(tape, rec.dmu / batch, rec.dlog_sigma / batch, single)
        expected += single / m
    np.testing.assert_allclose(g_dec, expected, rtol=1e-10, atol=1e-14)


def test_train_step_draws_fresh_noise(rng):
    model = _tiny_vi(rng)
    y, u = _window(rng)
    parts, grad = vi_train_step(model, y, u, 0.5, 3, np.random.default_rng(11))
    eps = np.random.default_rng(11).standard_normal((3, 2, 2))
    expected_parts, expected = vi_gradient(model, y, u, eps, 0.5)
    np.testing.assert_array_equal(grad, expected)
    assert parts.loss == expected_parts.loss


# ── windows and inference helpers ────────────────────────────


def test_window_sampling(tiny_dataset):
    source = WindowSource.from_dataset(tiny_dataset)
    traj, start = sample_windows(source.train_indices, 50, 9, source.length, stream(0, 1))
    assert set(traj) <= set(source.train_indices)
    assert start.min() >= 0 and start.max() <= source.length - 9
    y, u = source.gather(traj, start, 9)
    assert y.shape == (9, 50, 1)
    assert u.shape == (9, 50, 0)
    np.testing.assert_array_equal(y[:, 0], source.y[traj[0], start[0]: start[0] + 9])
    with pytest.raises(UsageError):
        sample_windows(source.train_indices, 2, source.length + 1, source.length, stream(0, 1))


def test_encode_prefixes_matches_direct_encoding(rng):
    model = _tiny_vi(rng, n_c=3)
    y, u = _window(rng, steps=12, batch=2)
    codes = encode_prefixes(model.encoder, y, u, [4, 0, 12])
    xs = np.concatenate([y, u], axis=-1)
    np.testing.assert_array_equal(codes[0], model.encoder.encode(xs[:5]))
    np.testing.assert_array_equal(codes[1], model.encoder.encode(xs[:1]))
    np.testing.assert_array_equal(codes[2], model.encoder.encode(xs))
    with pytest.raises(UsageError):
        encode_prefixes(model.encoder, y, u, [13])

    q = posterior_trajectory(model, y[:, 0], u[:, 0], 6)
    assert q.m_q.shape == (7, 2)
    np.testing.assert_allclose(q.m_q[4], model.posterior_from_code(codes[0][:1]).m_q[0], rtol=1e-14)


# ── training runs ────────────────────────────────────────────


def test_encoder_training_is_reproducible(tiny_dataset, tiny_config):
    first, log1 = train_encoder(tiny_dataset, tiny_config)
    second, log2 = train_encoder(tiny_dataset, tiny_config)
    np.testing.assert_array_equal(first.params, second.params)
    assert list(log1.log.columns) == LOG_COLUMNS
    assert len(log1.log) == tiny_config.train.iterations
    assert log1.log.equals(log2.log)
    assert 1 <= log1.best_iteration <= tiny_config.train.iterations


def test_vi_training_freezes_encoder(tiny_dataset, tiny_config):
    encoder, _ = train_encoder(tiny_dataset, tiny_config)
    before = encoder.params.copy()
    model, result = train_vi(tiny_dataset, encoder, tiny_config, lam=0.0)
    np.testing.assert_array_equal(encoder.params, before)
    assert model.encoder is encoder
    assert np.isfinite(result.best_val)
    assert np.all(np.isfinite(model.theta))


def test_vi_training_rejects_mismatched_encoder(tiny_dataset, tiny_config):
    encoder = EncoderModel.create(1, 1, tiny_config.model.n_c)
    with pytest.raises(UsageError):
        train_vi(tiny_dataset, encoder, tiny_config)


def test_non_finite_loss_is_a_training_failure(tiny_dataset, tiny_config):
    encoder = EncoderModel.create(1, 0, tiny_config.model.n_c, np.random.default_rng(0))
    encoder.params[0] = np.nan
    with pytest.raises(TrainingFailure) as info:
        train_regression(WindowSource.from_dataset(tiny_dataset), encoder, tiny_config.train, "encoder")
    assert info.value.iteration == 0


@pytest.mark.slow
def test_mean_kl_falls_as_lambda_grows(tiny_dataset, tiny_config):
    train = tiny_config.train.model_copy(update={"iterations": 300, "eval_interval": 25, "log_interval": 100, "batch": 4})
    config = tiny_config.model_copy(update={"train": train})
    encoder, _ = train_encoder(tiny_dataset, config)
    source = WindowSource.from_dataset(tiny_dataset)
    n_points = train.seq_len + 1
    traj, start = sample_windows(source.val_indices, 16, n_points, source.length, np.random.default_rng(0))
    y, u = source.gather(traj, start, n_points)

    kl = []
    for lam in (0.01, 1.0, 100.0):
        model, _ = train_vi(tiny_dataset, encoder, config, lam)
        kl.append(float(kl_gaussian(model.infer(y, u), model.sigma_z).mean()))
    assert all(b <= 1.05 * a + 1e-6 for a, b in zip(kl, kl[1:]))
    assert kl[-1] < kl[0]

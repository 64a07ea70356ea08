import time

import numpy as np
import pytest

from config.errors import UsageError
from nn import GaussianPrediction
from simulate import (
    ForecastDiverged,
    ForecastEnsemble,
    OneStepPrediction,
    empirical_interval,
    ensemble_frame,
    forecast_model,
    mc_forecast,
    mixture_draws,
    mixture_moments,
    one_step_predict,
    onestep_frame,
    sample_latents,
    spin_up,
    summarize_ensemble,
    teacher_forced,
)
from vi_model import DecoderModel, EncoderModel, VIModel


class LinearStub:
    """y_{t+1} = a y_t + sigma_n * noise, as a one-input step model."""

    n_x = 1

    def __init__(self, a: float, log_sigma: float):
        self.a = a
        self.log_sigma = log_sigma

    def zero_state(self, batch: int) -> np.ndarray:
        return np.zeros((batch, 1))

    def step(self, x_t: np.ndarray, state: np.ndarray):
        mu = self.a * x_t[:, :1]
        return GaussianPrediction(mu=mu, log_sigma=np.full_like(mu, self.log_sigma)), state + 1


def _history(tau: int = 1, value: float = 1.0):
    return np.full((tau + 1, 1), value), np.zeros((tau + 1, 0))


def _vi_pair(rng, n_z: int):
    encoder = EncoderModel.create(1, 0, 3, rng)
    vi = VIModel.initialized(encoder, 0, n_z, 4, 2, 1.0, rng)
    baseline = DecoderModel(1, 0, n_z, 3, vi.decoder.params.copy())
    return vi, baseline


def _series(rng, n: int = 40):
    y = 0.4 * np.sin(np.linspace(0, 6, n))[:, None] + 0.01 * rng.standard_normal((n, 1))
    return y, np.zeros((n, 0))


# ── spin-up and mixtures ─────────────────────────────────────


def test_spin_up_requires_history():
    y_hist, u_hist = _history(tau=0)
    with pytest.raises(UsageError):
        spin_up(LinearStub(0.5, 0.0), y_hist, u_hist)


def test_spin_up_consumes_every_history_point():
    y_hist, u_hist = _history(tau=4, value=2.0)
    ctx = spin_up(LinearStub(0.5, 0.0), y_hist, u_hist, batch=3)
    assert ctx.tau == 4
    np.testing.assert_array_equal(ctx.state, 5.0)
    np.testing.assert_array_equal(ctx.prediction.mu, 1.0)


def test_two_component_mixture():
    mu, sigma = mixture_moments(np.array([0.0, 2.0]), np.array([1.0, 1.0]))
    assert mu == pytest.approx(1.0)
    assert sigma ** 2 == pytest.approx(2.0)


def test_degenerate_mixtures(rng):
    mu_c, sigma_c = rng.standard_normal((1, 5, 2)), np.exp(rng.standard_normal((1, 5, 2)))
    mu, sigma = mixture_moments(mu_c, sigma_c)
    np.testing.assert_array_equal(mu, mu_c[0])
    np.testing.assert_allclose(sigma, sigma_c[0], rtol=1e-14)
    mu, sigma = mixture_moments(np.repeat(mu_c, 4, axis=0), np.repeat(sigma_c, 4, axis=0))
    np.testing.assert_allclose(mu, mu_c[0], rtol=1e-14)
    np.testing.assert_allclose(sigma, sigma_c[0], rtol=1e-12)


def test_mixture_moment_identity(rng):
    mu_c = rng.standard_normal((7, 3))
    sigma_c = np.exp(0.3 * rng.standard_normal((7, 3)))
    mu, sigma = mixture_moments(mu_c, sigma_c)
    second = np.mean(mu_c ** 2 + sigma_c ** 2, axis=0)
    np.testing.assert_allclose(mu, mu_c.mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(sigma ** 2, second - mu ** 2, rtol=0, atol=1e-12)


def test_mixture_draws_pick_whole_components(rng):
    mu_c = np.tile(np.array([0.0, 10.0])[None, :, None], (3, 1, 1))
    draws = mixture_draws(mu_c, np.zeros_like(mu_c), 2000, rng)
    assert draws.shape == (2000, 3, 1)
    assert set(np.unique(draws)) == {0.0, 10.0}
    assert draws.mean() == pytest.approx(5.0, abs=0.5)


# ── one-step prediction ──────────────────────────────────────


def test_single_latent_sample_is_one_component(rng):
    vi, _ = _vi_pair(rng, n_z=2)
    y, u = _series(rng)
    pred = one_step_predict(vi, y, u, tau=10, m=1, rng=np.random.default_rng(3))
    z = vi.infer(y[:11, None], u[:11, None])
    z = z.m_q + z.sigma_q * np.random.default_rng(3).standard_normal((1, 2))
    mu, sigma = teacher_forced(vi.decoder, y, u, z)
    np.testing.assert_allclose(pred.mu, mu[:, 0], rtol=1e-14)
    np.testing.assert_allclose(pred.sigma, sigma[:, 0], rtol=1e-14)
    assert pred.mu.shape == (len(y) - 1, 1)


def test_baseline_one_step_is_its_own_gaussian(rng):
    _, baseline = _vi_pair(rng, n_z=0)
    y, u = _series(rng)
    pred = one_step_predict(baseline, y, u, tau=10, m=50, rng=rng)
    mu, sigma = teacher_forced(baseline, y, u)
    np.testing.assert_allclose(pred.mu, mu[:, 0], rtol=1e-14)
    np.testing.assert_allclose(pred.sigma, sigma[:, 0], rtol=1e-14)


def test_one_step_tau_range(rng):
    vi, _ = _vi_pair(rng, n_z=2)
    y, u = _series(rng, n=12)
    for tau in (0, 12):
        with pytest.raises(UsageError):
            one_step_predict(vi, y, u, tau=tau, m=3, rng=rng)


def test_one_step_intervals_come_from_mixture_draws(rng):
    vi, _ = _vi_pair(rng, n_z=2)
    y, u = _series(rng)
    pred = one_step_predict(vi, y, u, tau=10, m=4, rng=np.random.default_rng(5), levels=[0.5, 0.9], n_draws=300)
    assert pred.levels == [0.5, 0.9]

    gen = np.random.default_rng(5)
    z = sample_latents(vi, y[:11], u[:11], 4, gen)
    mu, sigma = teacher_forced(vi.decoder, y, u, z)
    lo, hi = empirical_interval(mixture_draws(mu, sigma, 300, gen), 0.9)
    np.testing.assert_array_equal(pred.lower[0.9], lo)
    np.testing.assert_array_equal(pred.upper[0.9], hi)
    assert np.all(pred.lower[0.5] >= pred.lower[0.9])
    assert np.all(pred.upper[0.5] <= pred.upper[0.9])
    assert pred.lower[0.9].shape == pred.mu.shape


# ── Monte Carlo forecasting ──────────────────────────────────


def test_zero_noise_paths_are_identical():
    y_hist, u_hist = _history()
    ensemble = mc_forecast(LinearStub(0.8, -np.inf), y_hist, u_hist, n_samples=150, horizon=6, seed=0)
    np.testing.assert_array_equal(ensemble.samples, np.broadcast_to(ensemble.samples[:1], ensemble.samples.shape))
    np.testing.assert_allclose(ensemble.samples[0, :, 0], 0.8 ** np.arange(1, 7), rtol=1e-13)


def test_linear_gaussian_variance_recursion():
    a, sigma_n, n = 0.9, 0.3, 10_000
    y_hist, u_hist = _history()
    ensemble = mc_forecast(LinearStub(a, np.log(sigma_n)), y_hist, u_hist, n_samples=n, horizon=8, seed=11)
    var = 0.0
    for t in range(8):
        var = a * a * var + sigma_n ** 2
        sample_var = ensemble.samples[:, t, 0].var(ddof=1)
        se = var * np.sqrt(2.0 / (n - 1))
        assert abs(sample_var - var) < 4 * se
        assert ensemble.samples[:, t, 0].mean() == pytest.approx(a ** (t + 1), abs=4 * np.sqrt(var / n))


def test_forecast_is_independent_of_threads(rng):
    _, baseline = _vi_pair(rng, n_z=0)
    y, u = _series(rng)
    serial = forecast_model(baseline, y, u, start=20, tau=10, n_samples=250, horizon=8, seed=5, key=(3,))
    threaded = forecast_model(baseline, y, u, start=20, tau=10, n_samples=250, horizon=8, seed=5, threads=3, key=(3,))
    np.testing.assert_array_equal(serial.samples, threaded.samples)
    other = forecast_model(baseline, y, u, start=20, tau=10, n_samples=250, horizon=8, seed=5, key=(4,))
    assert not np.array_equal(serial.samples, other.samples)


def test_vi_without_latents_reduces_to_baseline(rng):
    vi, baseline = _vi_pair(rng, n_z=0)
    y, u = _series(rng)
    a = forecast_model(vi, y, u, start=15, tau=10, n_samples=130, horizon=12, seed=2, key=(0,))
    b = forecast_model(baseline, y, u, start=15, tau=10, n_samples=130, horizon=12, seed=2, key=(0,))
    np.testing.assert_array_equal(a.samples, b.samples)
    np.testing.assert_array_equal(a.sigma, b.sigma)


def test_vi_forecast_holds_one_latent_per_path(rng):
    vi, _ = _vi_pair(rng, n_z=2)
    y, u = _series(rng)
    ensemble = forecast_model(vi, y, u, start=15, tau=10, n_samples=9, horizon=5, seed=2)
    assert ensemble.z.shape == (9, 2)
    assert ensemble.samples.shape == (9, 5, 1)
    assert np.all(np.isfinite(ensemble.samples))


def test_forecast_bounds(rng):
    _, baseline = _vi_pair(rng, n_z=0)
    y, u = _series(rng, n=30)
    with pytest.raises(UsageError):
        forecast_model(baseline, y, u, start=5, tau=10, n_samples=2, horizon=3, seed=0)
    with pytest.raises(UsageError):
        forecast_model(baseline, y, u, start=20, tau=10, n_samples=2, horizon=10, seed=0)
    forecast_model(baseline, y, u, start=20, tau=10, n_samples=2, horizon=9, seed=0)


def test_forcing_is_required_over_horizon():
    y_hist = np.ones((3, 1))
    u_hist = np.zeros((3, 1))
    with pytest.raises(UsageError):
        mc_forecast(LinearStub(0.5, 0.0), y_hist, u_hist, n_samples=2, horizon=4, seed=0)
    with pytest.raises(UsageError):
        mc_forecast(LinearStub(0.5, 0.0), y_hist, u_hist, n_samples=2, horizon=4, seed=0, u_future=np.zeros((2, 1)))


def test_divergence_carries_partial_ensemble():
    y_hist, u_hist = _history()
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(ForecastDiverged) as info:
            mc_forecast(LinearStub(1e200, -np.inf), y_hist, u_hist, n_samples=3, horizon=5, seed=0)
    assert info.value.step == 1
    assert info.value.partial.horizon == 1
    np.testing.assert_array_equal(info.value.partial.samples[:, 0, 0], 1e200)


# ── summaries ────────────────────────────────────────────────


def _ramp_ensemble(n: int = 100, steps: int = 3) -> ForecastEnsemble:
    samples = np.tile(np.arange(1.0, n + 1)[:, None, None], (1, steps, 1))
    return ForecastEnsemble(samples=samples, mu=samples, sigma=np.zeros_like(samples), start=10, seed=0)


def test_empirical_interval_inverts_cdf():
    lo, hi = empirical_interval(_ramp_ensemble().samples, 0.9)
    np.testing.assert_array_equal(lo, 5.0)
    np.testing.assert_array_equal(hi, 95.0)


def test_summary_columns():
    frame = summarize_ensemble(_ramp_ensemble(), levels=[0.6, 0.9])
    assert list(frame.columns) == [
        "t", "dim", "mean", "std", "mix_mu", "mix_sigma", "q025", "q975", "q_lo_0.6", "q_hi_0.6", "q_lo_0.9", "q_hi_0.9"
    ]
    assert frame["t"].tolist() == [11, 12, 13]
    assert frame["mean"].iloc[0] == pytest.approx(50.5)
    assert frame["q025"].iloc[0] == 3.0
    assert frame["q975"].iloc[0] == 98.0
    # paths with zero predictive noise: the mixture is the ensemble itself
    assert frame["mix_mu"].iloc[0] == pytest.approx(50.5)
    assert frame["mix_sigma"].iloc[0] == pytest.approx(frame["std"].iloc[0], rel=1e-12)


def test_ensemble_frame_is_long():
    frame = ensemble_frame(_ramp_ensemble(n=4, steps=2))
    assert list(frame.columns) == ["t", "sample_id", "y_0"]
    assert len(frame) == 8
    assert frame["y_0"].tolist() == [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]


def test_onestep_frame_carries_empirical_bounds():
    pred = OneStepPrediction(
        mu=np.zeros((2, 1)),
        sigma=np.ones((2, 1)),
        lower={0.9: np.array([[-1.0], [-2.0]])},
        upper={0.9: np.array([[1.5], [2.5]])},
    )
    frame = onestep_frame(pred)
    assert list(frame.columns) == ["t", "dim", "mu", "sigma", "lo_0.9", "hi_0.9"]
    assert frame["lo_0.9"].tolist() == [-1.0, -2.0]
    assert frame["hi_0.9"].tolist() == [1.5, 2.5]
    assert list(onestep_frame(OneStepPrediction(mu=pred.mu, sigma=pred.sigma)).columns) == ["t", "dim", "mu", "sigma"]


@pytest.mark.slow
def test_forecast_cost_is_linear_in_ensemble_size():
    rng = np.random.default_rng(0)
    encoder = EncoderModel.create(1, 0, 32, rng)
    model = VIModel.initialized(encoder, 0, 0, 4, 2, 1.0, rng).decoder
    y_hist, u_hist = _history(tau=20, value=0.1)

    def fastest(n: int) -> float:
        times = []
        for _ in range(3):
            began = time.perf_counter()
            mc_forecast(model, y_hist, u_hist, n_samples=n, horizon=100, seed=0)
            times.append(time.perf_counter() - began)
        return min(times)

    fastest(100)
    ratio = fastest(1000) / fastest(100)
    assert 8.0 <= ratio <= 12.0

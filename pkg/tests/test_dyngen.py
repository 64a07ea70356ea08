import json

import numpy as np
import pytest

from config.errors import UsageError
from dyngen import (
    DegenerateDimension,
    MgParams,
    Trajectory,
    VdpParams,
    downsample_and_noise,
    first_split,
    get_generator,
    integrate_mackey_glass,
    integrate_vdp_ou,
    integrate_vdp_ou_batch,
    load_dataset,
    normalize_dataset,
    ou_path,
    sample_mg_params,
    save_dataset,
    stream,
)
from dyngen.integrators import get_integrator
from dyngen.storage import DatasetFormatError


def _decay_error(dt: float, gamma: float = 0.07, t_end: float = 20.0) -> float:
    n = int(round(t_end / dt))
    phi = integrate_mackey_glass(MgParams(alpha=0.0, gamma=gamma, tau=20.0), dt, n, history=1.0, burn_in=0.0)
    t = np.arange(n + 1) * dt
    return float(np.abs(phi - np.exp(-gamma * t)).max())


# ── integrators ──────────────────────────────────────────────


def test_mackey_glass_without_gain_decays_exponentially():
    phi = integrate_mackey_glass(MgParams(alpha=0.0, gamma=0.07, tau=20.0), 0.01, 1000, history=1.0, burn_in=0.0)
    assert phi[1000] == pytest.approx(0.4966, abs=1e-4)
    assert phi[1000] == pytest.approx(np.exp(-0.7), abs=1e-8)


def test_mackey_glass_equilibrium_is_stationary():
    alpha, gamma = 0.3, 0.1
    phi_star = (alpha / gamma - 1.0) ** 0.1
    phi = integrate_mackey_glass(MgParams(alpha=alpha, gamma=gamma, tau=25.0), 0.01, 100, history=phi_star, burn_in=0.0)
    assert np.abs(phi - phi_star).max() < 1e-6


def test_ab3_convergence_order():
    errors = [_decay_error(dt) for dt in (0.02, 0.01, 0.005)]
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    for ratio in ratios:
        assert 6.0 <= ratio <= 10.0
    assert min(np.log2(ratios)) >= 2.7


def test_integrator_factory():
    f = lambda t, x, u: -x  # noqa: E731
    for name in ("Euler", "RK4", "AB3"):
        integrator = get_integrator(0.1, f, name)
        assert integrator.step(0.0, np.array([1.0]))[0] < 1.0
    with pytest.raises(ValueError):
        get_integrator(0.0, f)


def test_mackey_glass_rejects_delay_shorter_than_step():
    with pytest.raises(UsageError):
        integrate_mackey_glass(MgParams(alpha=0.2, gamma=0.1, tau=0.005), 0.01, 10)


def test_harmonic_energy_is_conserved():
    dt = 0.001
    n = int(round(10 * 2 * np.pi / dt))
    sol = integrate_vdp_ou_batch(
        [VdpParams(gamma=0.0, alpha=0.0, theta=0.5)], dt, n, [stream(0, 0)], initial=(1.0, 0.0), burn_in=0.0
    )
    energy = sol.phi[0] ** 2 + sol.velocity[0] ** 2
    assert np.abs(energy - 1.0).max() < 1e-3


def test_mackey_glass_parameter_draws():
    rng = stream(4, 0)
    draws = [sample_mg_params(rng) for _ in range(10_000)]
    alpha = np.array([p.alpha for p in draws])
    assert all(0.2 <= p.alpha <= 0.4 and 0.05 <= p.gamma <= 0.1 and 20.0 <= p.tau <= 40.0 for p in draws)
    assert alpha.mean() == pytest.approx(0.3, abs=0.005)


def test_single_vdp_trajectory_matches_batch():
    params = VdpParams(gamma=1.0, alpha=0.5, theta=0.5)
    phi, u = integrate_vdp_ou(params, 0.01, 500, stream(5, 0), burn_in=1.0)
    sol = integrate_vdp_ou_batch([params], 0.01, 500, [stream(5, 0)], initial=(0.1, 0.0), burn_in=1.0)
    assert phi.shape == u.shape == (501,)
    np.testing.assert_array_equal(phi, sol.phi[0])
    np.testing.assert_array_equal(u, sol.u[0])


# ── Ornstein-Uhlenbeck forcing ───────────────────────────────


def test_ou_stationary_variance():
    u = ou_path(theta=0.5, u_ref=1.0, dt=1.0, n_steps=10**6, rng=stream(1, 0))
    assert np.var(u) == pytest.approx(1.0, rel=0.02)


def test_ou_lag_one_autocorrelation():
    theta, dt = 100.0, 0.001
    u = ou_path(theta=theta, u_ref=1.0, dt=dt, n_steps=200_000, rng=stream(2, 0))
    lag1 = np.corrcoef(u[:-1], u[1:])[0, 1]
    assert lag1 == pytest.approx(np.exp(-theta * dt), abs=0.02)


def test_ou_initial_value():
    u = ou_path(theta=1.0, u_ref=1.0, dt=0.1, n_steps=5, rng=stream(0, 0), u0=0.7)
    assert u[0] == 0.7
    assert u.shape == (6,)


# ── sampling and noise ───────────────────────────────────────


def test_zero_noise_keeps_phi():
    phi = np.sin(np.linspace(0, 10, 1001))
    traj = downsample_and_noise(phi, None, 10, 0.0, stream(0, 0))
    np.testing.assert_array_equal(traj.y, traj.phi)
    assert traj.length == 101
    assert traj.forcing_dim == 0


def test_noise_is_white_and_not_applied_to_forcing():
    n = 20_000
    phi = np.zeros(n)
    u = np.linspace(-1, 1, n)
    traj = downsample_and_noise(phi, u, 1, 0.5, stream(0, 1))
    residual = (traj.y - traj.phi)[:, 0]
    lag1 = np.corrcoef(residual[:-1], residual[1:])[0, 1]
    assert abs(lag1) < 3.0 / np.sqrt(n)
    assert np.std(residual) == pytest.approx(0.5, rel=0.03)
    np.testing.assert_array_equal(traj.u[:, 0], u)


def test_downsample_rejects_bad_arguments():
    with pytest.raises(UsageError):
        downsample_and_noise(np.zeros(10), None, 0, 0.1, stream(0, 0))
    with pytest.raises(UsageError):
        downsample_and_noise(np.zeros(10), None, 1, -0.1, stream(0, 0))


@pytest.mark.parametrize(
    "system, stride, sigma_eps",
    [("mackey_glass", 100, 0.03), ("mackey-glass", 100, 0.03), ("vdp", 200, 0.075)],
)
def test_generator_defaults(system, stride, sigma_eps):
    generator = get_generator(system)
    assert generator.stride == stride
    assert generator.sigma_eps == sigma_eps


def test_generator_rejects_non_integer_stride_and_unknown_system():
    with pytest.raises(UsageError):
        get_generator("vdp", dt_fine=0.001, dt_sample=0.0015)
    with pytest.raises(UsageError):
        get_generator("lorenz")


def test_generation_is_deterministic_across_threads():
    serial = get_generator("mackey_glass", burn_in=10.0, chunk_size=2).generate(5, 15, seed=9)
    threaded = get_generator("mackey_glass", burn_in=10.0, chunk_size=1, threads=3).generate(5, 15, seed=9)
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.y, b.y)
        assert a.params == b.params
    other = get_generator("mackey_glass", burn_in=10.0).generate(5, 15, seed=10)
    assert not np.array_equal(serial[0].y, other[0].y)


def test_parameter_overrides():
    trajectories = get_generator("mackey_glass", burn_in=10.0).generate(2, 10, seed=0, overrides=[[0.35, 0.07, 33.72]])
    assert trajectories[0].params == MgParams(alpha=0.35, gamma=0.07, tau=33.72)
    assert trajectories[1].params != trajectories[0].params


def test_vdp_trajectories_carry_forcing():
    trajectories = get_generator("vdp", burn_in=1.0).generate(2, 20, seed=0)
    traj = trajectories[0]
    assert traj.y.shape == (21, 1)
    assert traj.u.shape == (21, 1)
    assert np.all(np.isfinite(traj.u))
    assert not np.array_equal(traj.y, traj.phi)


# ── normalization and split ──────────────────────────────────


def _ramp(lo: float, hi: float, n: int = 11) -> Trajectory:
    y = np.linspace(lo, hi, n)
    return Trajectory(y=y, u=None, phi=y, params=MgParams(0.3, 0.07, 25.0), dt_sample=1.0)


def test_normalization_maps_training_range_to_half_interval():
    dataset = normalize_dataset([_ramp(2.0, 5.0), _ramp(0.0, 10.0)], [0])
    y, _, _ = dataset.normalized(0)
    assert y.min() == pytest.approx(-0.5, abs=1e-15)
    assert y.max() == pytest.approx(0.5, abs=1e-15)
    assert dataset.val_indices == (1,)
    back = dataset.norm_stats.denormalize_y(y)
    np.testing.assert_allclose(back, dataset.trajectories[0].y, rtol=1e-12)


def test_constant_dimension_is_degenerate():
    with pytest.raises(DegenerateDimension):
        normalize_dataset([_ramp(1.0, 1.0)], [0])


def test_first_split_sizes():
    train = first_split(500, 400)
    assert train == list(range(400))
    dataset = normalize_dataset([_ramp(0.0, 1.0 + i) for i in range(500)], train)
    assert len(dataset.train_indices) == 400
    assert len(dataset.val_indices) == 100
    assert dataset.val_indices[0] == 400


def test_noise_sigma_in_normalized_units(tiny_dataset):
    expected = tiny_dataset.noise_sigma / (tiny_dataset.norm_stats.y_max - tiny_dataset.norm_stats.y_min)
    np.testing.assert_allclose(tiny_dataset.noise_sigma_normalized, expected)


def test_param_matrix(tiny_dataset):
    names, values = tiny_dataset.param_matrix([0, 1])
    assert names == ["alpha", "gamma", "tau"]
    assert values.shape == (2, 3)


# ── storage ──────────────────────────────────────────────────


def test_dataset_directory_round_trip(tiny_dataset, tmp_path):
    root = save_dataset(tiny_dataset, tmp_path / "ds")
    manifest = json.loads((root / "manifest.json").read_text())
    for key in ("system", "K", "T", "dt_fine", "stride", "sigma_eps", "seed", "norm_stats", "train_count", "val_count", "params"):
        assert key in manifest
    assert (root / "traj_0000.bin").read_bytes().startswith(b"VIDYN-TRJ1")

    loaded = load_dataset(root)
    assert loaded.train_indices == tiny_dataset.train_indices
    assert loaded.val_indices == tiny_dataset.val_indices
    for a, b in zip(loaded.trajectories, tiny_dataset.trajectories):
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.phi, b.phi)
        assert a.params == b.params
    np.testing.assert_array_equal(loaded.norm_stats.y_min, tiny_dataset.norm_stats.y_min)


def test_corrupt_trajectory_block(tiny_dataset, tmp_path):
    root = save_dataset(tiny_dataset, tmp_path / "ds")
    (root / "traj_0001.bin").write_bytes(b"garbage")
    with pytest.raises(DatasetFormatError):
        load_dataset(root)
    with pytest.raises(OSError):
        load_dataset(tmp_path / "missing")

import numpy as np
import pytest

from config.errors import UsageError
from optim import (
    AdamState,
    LrSchedule,
    PoisonedGradient,
    ScheduleRangeError,
    adam_step,
    clip_by_global_norm,
    cosine_lr,
)


@pytest.mark.parametrize("step, expected", [(0, 1e-3), (30000, 1e-4), (15000, 5.5e-4)])
def test_cosine_schedule(step, expected):
    assert cosine_lr(step, LrSchedule()) == pytest.approx(expected, rel=1e-12)


def test_cosine_schedule_range():
    sched = LrSchedule(total=100)
    with pytest.raises(ScheduleRangeError):
        cosine_lr(101, sched)
    with pytest.raises(ScheduleRangeError):
        cosine_lr(-1, sched)


@pytest.mark.parametrize("kwargs", [{"xi_min": 0.0}, {"xi_min": 2e-3}, {"total": 0}])
def test_invalid_schedule(kwargs):
    with pytest.raises(UsageError):
        LrSchedule(**kwargs)


def test_zero_gradient_leaves_parameters():
    params = np.array([1.0, -2.0])
    state = AdamState.zeros(2)
    adam_step(params, np.zeros(2), state, 1e-3)
    np.testing.assert_array_equal(params, [1.0, -2.0])
    assert state.step == 1


def test_first_step_moves_by_rate():
    params = np.array([0.0])
    adam_step(params, np.array([0.5]), AdamState.zeros(1), 1e-3)
    assert params[0] == pytest.approx(-1e-3, rel=1e-7)


def test_global_norm_clipping():
    grads = np.array([30.0, 40.0])
    clipped, norm = clip_by_global_norm(grads, 5.0)
    assert norm == pytest.approx(50.0)
    np.testing.assert_allclose(clipped, grads * 0.1)

    state = AdamState.zeros(2)
    post = adam_step(np.zeros(2), grads, state, 1e-3, clip=5.0)
    assert post == pytest.approx(5.0)
    np.testing.assert_allclose(state.m, 0.1 * grads * 0.1)


def test_clipping_is_a_no_op_below_threshold():
    grads = np.array([3.0, 4.0])
    clipped, _ = clip_by_global_norm(grads, 5.0)
    assert clipped is grads
    disabled, _ = clip_by_global_norm(grads * 100, 0.0)
    np.testing.assert_array_equal(disabled, grads * 100)


def test_poisoned_gradient_names_index():
    params = np.zeros(5)
    grads = np.array([0.1, 0.2, 0.3, np.nan, np.inf])
    state = AdamState.zeros(5)
    with pytest.raises(PoisonedGradient) as info:
        adam_step(params, grads, state, 1e-3)
    assert info.value.index == 3
    assert state.step == 0
    np.testing.assert_array_equal(params, 0.0)


def test_shape_mismatch():
    with pytest.raises(UsageError):
        adam_step(np.zeros(3), np.zeros(2), AdamState.zeros(3), 1e-3)


def test_adam_minimizes_quadratic():
    theta = np.array([1.0])
    state = AdamState.zeros(1)
    reached = None
    for step in range(2000):
        adam_step(theta, theta.copy(), state, 1e-2)
        if abs(theta[0]) < 1e-3:
            reached = step
            break
    assert reached is not None


def test_updates_are_deterministic(rng):
    grads = rng.standard_normal((10, 4))
    results = []
    for _ in range(2):
        params = np.ones(4)
        state = AdamState.zeros(4)
        for g in grads:
            adam_step(params, g, state, 1e-3)
        results.append(params)
    np.testing.assert_array_equal(results[0], results[1])

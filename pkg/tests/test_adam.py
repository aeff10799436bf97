import numpy as np
import pytest

from ovhar.errors import ShapeError
from ovhar.nn.optim import AdamState, adam_step


def test_zero_gradients_leave_params_unchanged():
    params = {"w": np.array([1.5, -2.0])}
    state = AdamState()
    adam_step(params, {"w": np.zeros(2)}, state)
    assert np.array_equal(params["w"], [1.5, -2.0])
    assert state.t == 1


def test_first_step_hand_value():
    # m_hat = v_hat = 1 after bias correction, so the step is lr / (1 + eps)
    params = {"w": np.array([0.0])}
    adam_step(params, {"w": np.array([1.0])}, AdamState(lr=1e-3))
    assert params["w"][0] == pytest.approx(-1e-3 / (1.0 + 1e-8), abs=1e-15)


def test_two_steps_constant_gradient_monotone():
    params = {"w": np.array([0.0])}
    state = AdamState(lr=1e-3)
    adam_step(params, {"w": np.array([1.0])}, state)
    after_one = params["w"][0]
    adam_step(params, {"w": np.array([1.0])}, state)
    after_two = params["w"][0]
    assert after_two < after_one < 0.0
    assert after_two == pytest.approx(-2e-3, rel=1e-7)
    assert state.t == 2


def test_shape_mismatch_rejected():
    params = {"w": np.zeros(3)}
    with pytest.raises(ShapeError):
        adam_step(params, {"w": np.zeros(4)}, AdamState())
    with pytest.raises(ShapeError):
        adam_step(params, {"other": np.zeros(3)}, AdamState())


def test_descends_quadratic():
    # minimizing 0.5*(w-3)^2 converges towards 3
    params = {"w": np.array([0.0])}
    state = AdamState(lr=0.05)
    for _ in range(500):
        grad = params["w"] - 3.0
        adam_step(params, {"w": grad}, state)
    assert abs(params["w"][0] - 3.0) < 0.05

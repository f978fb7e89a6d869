import numpy as np
import pytest

from rominvert.adam import AdamState, adam_step


def test_zero_gradient_leaves_params():
    p = {"w": np.array([1.0, -2.0])}
    new, state = adam_step(p, {"w": np.zeros(2)}, AdamState.zeros_like(p))
    assert np.array_equal(new["w"], p["w"])
    assert state.step == 1


def test_first_step_magnitude():
    # bias correction makes m_hat = g and v_hat = g^2 on the first step
    p = {"w": np.array([0.0, 0.0, 0.0])}
    g = {"w": np.array([1.0, -1.0, 1.0])}
    new, _ = adam_step(p, g, AdamState.zeros_like(p), lr=0.01, eps=1e-8)
    np.testing.assert_allclose(new["w"], [-0.01 / (1 + 1e-8), 0.01 / (1 + 1e-8), -0.01 / (1 + 1e-8)],
                               rtol=1e-14)


def test_first_step_scale_invariant():
    p = {"w": np.zeros(2)}
    a, _ = adam_step(p, {"w": np.array([1e-3, 1e3])}, AdamState.zeros_like(p), lr=0.1, eps=0)
    np.testing.assert_allclose(a["w"], [-0.1, -0.1])


def test_descent_on_quadratic():
    p = {"w": np.array([3.0])}
    state = AdamState.zeros_like(p)
    for _ in range(2000):
        p, state = adam_step(p, {"w": 2 * p["w"]}, state, lr=0.01)
    assert abs(p["w"][0]) < 1e-2


def test_inputs_not_mutated():
    p = {"w": np.ones(2)}
    state = AdamState.zeros_like(p)
    adam_step(p, {"w": np.ones(2)}, state)
    assert np.array_equal(p["w"], np.ones(2))
    assert state.step == 0 and np.array_equal(state.m["w"], np.zeros(2))


def test_scalar_param():
    p = {"b": np.float64(0.0)}
    new, _ = adam_step(p, {"b": np.float64(2.0)}, AdamState.zeros_like(p), lr=0.5)
    assert float(new["b"]) == pytest.approx(-0.5, rel=1e-7)

"""Adam update rule checks against hand-evaluated closed forms."""

import numpy as np
import pytest

from slate_rank.diffcore import Adam, AdamState, Tensor, adam_step
from slate_rank.errors import TrainingError

LR, B1, B2, EPS = 1e-3, 0.9, 0.999, 1e-8


def test_zero_gradient_is_a_noop():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    p.grad = np.zeros(2)
    state = AdamState()
    adam_step({"w": p}, state, lr=LR, beta1=B1, beta2=B2, eps=EPS)
    np.testing.assert_array_equal(p.data, [1.0, -2.0])
    np.testing.assert_array_equal(state.m["w"], 0.0)
    np.testing.assert_array_equal(state.v["w"], 0.0)
    assert state.t == 1


def test_missing_gradient_is_a_noop():
    p = Tensor(np.array([0.5]), requires_grad=True)
    state = AdamState()
    adam_step({"w": p}, state)
    np.testing.assert_array_equal(p.data, [0.5])


def test_first_step_matches_published_update_rule():
    # hand evaluation: m1 = (1-b1) g, v1 = (1-b2) g^2,
    # m^ = m1/(1-b1) = g, v^ = v1/(1-b2) = g^2,
    # theta <- theta - lr * g / (|g| + eps)
    g = 0.37
    p = Tensor(np.array([2.0]), requires_grad=True)
    p.grad = np.array([g])
    state = AdamState()
    adam_step({"w": p}, state, lr=LR, beta1=B1, beta2=B2, eps=EPS)
    expected = 2.0 - LR * g / (abs(g) + EPS)
    np.testing.assert_allclose(p.data, [expected], rtol=1e-15)
    np.testing.assert_allclose(state.m["w"], [(1 - B1) * g])
    np.testing.assert_allclose(state.v["w"], [(1 - B2) * g * g])


def test_two_steps_constant_gradient_match_geometric_sums():
    # with constant g: m_t = (1 - b1^t) g, v_t = (1 - b2^t) g^2
    g = -1.25
    p = Tensor(np.array([0.0]), requires_grad=True)
    state = AdamState()
    for _ in range(2):
        p.grad = np.array([g])
        adam_step({"w": p}, state, lr=LR, beta1=B1, beta2=B2, eps=EPS)
    np.testing.assert_allclose(state.m["w"], [(1 - B1**2) * g], rtol=1e-12)
    np.testing.assert_allclose(state.v["w"], [(1 - B2**2) * g * g], rtol=1e-12)
    assert state.t == 2
    # bias correction makes each step's move identical for constant gradient
    np.testing.assert_allclose(p.data, [-2 * LR * g / (abs(g) + EPS)], rtol=1e-10)


def test_nan_gradient_aborts_before_mutation():
    clean = Tensor(np.array([1.0]), requires_grad=True)
    clean.grad = np.array([0.5])
    bad = Tensor(np.array([2.0]), requires_grad=True)
    bad.grad = np.array([np.nan])
    state = AdamState()
    with pytest.raises(TrainingError, match="bad_param"):
        adam_step({"ok": clean, "bad_param": bad}, state)
    np.testing.assert_array_equal(clean.data, [1.0])
    np.testing.assert_array_equal(bad.data, [2.0])
    assert state.t == 0


def test_wrapper_tracks_state_across_steps():
    opt = Adam(lr=0.1)
    p = Tensor(np.array([1.0]), requires_grad=True)
    for _ in range(3):
        p.grad = np.array([1.0])
        opt.step({"w": p})
    assert opt.state.t == 3
    assert p.data[0] < 1.0

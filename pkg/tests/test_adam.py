"""Adam against a scalar hand computation.

One step with gradient g and fresh state: m = (1-b1)g, v = (1-b2)g^2,
m_hat = g, v_hat = g^2, update = -lr * g / (|g| + eps) ~ -lr * sign(g).
"""

import numpy as np
import pytest

from splitsim.errors import ShapeMismatchError
from splitsim.nn import Adam

F32 = np.float32


def test_first_step_is_sign_scaled():
    p = np.array([1.0, -2.0, 0.5], dtype=F32)
    g = np.array([0.3, -0.7, 4.0], dtype=F32)
    opt = Adam([p], lr=0.001)
    opt.step([g])
    expected = np.array([1.0, -2.0, 0.5]) - 0.001 * np.sign([0.3, -0.7, 4.0]) * (
        np.abs([0.3, -0.7, 4.0]) / (np.abs([0.3, -0.7, 4.0]) + 1e-8)
    )
    np.testing.assert_allclose(p, expected, atol=1e-6)


def test_scalar_two_step_hand_trace():
    # full two-step recurrence worked out by hand for p0=0, g=1 both steps
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    p = np.array([0.0], dtype=F32)
    opt = Adam([p], lr=lr, beta1=b1, beta2=b2, eps=eps)
    g = np.array([1.0], dtype=F32)
    opt.step([g])
    m1, v1 = (1 - b1), (1 - b2)
    x1 = -lr * (m1 / (1 - b1)) / (np.sqrt(v1 / (1 - b2)) + eps)
    assert abs(float(p) - x1) < 1e-7
    opt.step([g])
    m2 = b1 * m1 + (1 - b1)
    v2 = b2 * v1 + (1 - b2)
    x2 = x1 - lr * (m2 / (1 - b1**2)) / (np.sqrt(v2 / (1 - b2**2)) + eps)
    assert abs(float(p) - x2) < 1e-6


def test_two_identical_steps_move_farther_than_one():
    p1 = np.array([0.0], dtype=F32)
    p2 = np.array([0.0], dtype=F32)
    g = np.array([0.5], dtype=F32)
    one = Adam([p1], lr=0.01)
    two = Adam([p2], lr=0.01)
    one.step([g.copy()])
    two.step([g.copy()])
    two.step([g.copy()])
    assert abs(float(p2)) > abs(float(p1))


def test_zero_gradient_is_fixed_point_and_decays_moments():
    p = np.array([3.0, -1.0], dtype=F32)
    opt = Adam([p], lr=0.01)
    opt.step([np.array([1.0, -1.0], dtype=F32)])
    m_after_one = opt.m[0].copy()
    before = p.copy()
    for _ in range(5):
        opt.step([np.zeros(2, dtype=F32)])
    # moments decay toward zero; parameters keep drifting only while m != 0
    assert np.all(np.abs(opt.m[0]) < np.abs(m_after_one))
    assert opt.t == 6
    # fresh optimizer with zero gradient: parameters exactly unchanged
    q = before.copy()
    fresh = Adam([q], lr=0.01)
    fresh.step([np.zeros(2, dtype=F32)])
    np.testing.assert_array_equal(q, before)


def test_shape_mismatch_rejected():
    p = np.zeros(3, dtype=F32)
    opt = Adam([p])
    with pytest.raises(ShapeMismatchError):
        opt.step([np.zeros(4, dtype=F32)])
    with pytest.raises(ShapeMismatchError):
        opt.step([np.zeros(3, dtype=F32), np.zeros(3, dtype=F32)])


def test_step_counter_strictly_increments():
    p = np.zeros(1, dtype=F32)
    opt = Adam([p])
    for k in range(1, 4):
        opt.step([np.ones(1, dtype=F32)])
        assert opt.t == k

"""Reduced-order kinematic models and the safety condition margin."""
import math

import numpy as np
import pytest

from veloshield import (Obstacle, distance_cbf, reduced_safe_condition,
                        single_axis, single_integrator, unicycle)


def test_single_integrator_identity():
    model = single_integrator(2)
    assert model.velocity([0.4, 0.2], [1.0, 2.0]) == pytest.approx([1.0, 2.0])


def test_single_integrator_zero_input():
    model = single_integrator(3)
    assert model.velocity([1.0, 2.0, 3.0], [0.0, 0.0, 0.0]) == pytest.approx([0, 0, 0])


def test_single_integrator_identity_property_random():
    rng = np.random.default_rng(0)
    model = single_integrator(4)
    for _ in range(100):
        q = rng.normal(size=4)
        mu = rng.normal(size=4)
        assert np.array_equal(model.velocity(q, mu), mu)


def test_single_integrator_rejects_nonpositive_dim():
    with pytest.raises(ValueError):
        single_integrator(0)


def test_unicycle_heading_along_x():
    model = unicycle()
    assert model.velocity([0, 0, 0.0], [1.0, 0.0]) == pytest.approx([1, 0, 0])


def test_unicycle_heading_along_y():
    model = unicycle()
    v = model.velocity([0, 0, math.pi / 2], [1.0, 0.0])
    assert v == pytest.approx([0, 1, 0], abs=1e-15)


def test_unicycle_general_pose_matrix_multiply_oracle():
    model = unicycle()
    psi = 0.3
    mu = np.array([0.5, 0.2])
    A = np.array([[math.cos(psi), 0.0], [math.sin(psi), 0.0], [0.0, 1.0]])
    assert np.allclose(model.velocity([1, 2, psi], mu), A @ mu, atol=0)
    assert model.velocity([1, 2, psi], mu) == pytest.approx(
        [0.5 * math.cos(0.3), 0.5 * math.sin(0.3), 0.2])


def test_unicycle_columns_unit_and_orthogonal():
    model = unicycle()
    rng = np.random.default_rng(2)
    for _ in range(50):
        A = model.matrix([0, 0, rng.uniform(-math.pi, math.pi)])
        assert np.linalg.norm(A[:, 0]) == pytest.approx(1.0, abs=1e-15)
        assert np.linalg.norm(A[:, 1]) == pytest.approx(1.0, abs=0)
        assert A[:, 0] @ A[:, 1] == 0.0


def test_single_axis_map():
    model = single_axis(2, 0)
    assert model.velocity([0.0, 0.3], [1.5]) == pytest.approx([1.5, 0.0])


def test_reduced_safe_condition_outward_motion_on_boundary():
    model = single_integrator(2)
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    ok, margin = reduced_safe_condition(model, cbf, [1.0, 0.0], [0.5, 0.0], 0.3)
    assert ok and margin > 0


def test_reduced_safe_condition_zero_input_margin_is_alpha_h():
    model = single_integrator(2)
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    ok, margin = reduced_safe_condition(model, cbf, [3.0, 0.0], [0.0, 0.0], 0.3)
    assert ok
    assert margin == pytest.approx(0.3 * 2.0)


def test_reduced_safe_condition_matches_direct_dot_product():
    rng = np.random.default_rng(8)
    model = unicycle()
    from veloshield import heading_cbf
    cbf = heading_cbf(Obstacle(np.array([1.0, -0.5]), 0.6), delta=0.4)
    for _ in range(50):
        q = rng.uniform([-3, -3, -math.pi], [3, 3, math.pi])
        if math.hypot(1.0 - q[0], -0.5 - q[1]) < 0.2:
            continue
        mu = rng.uniform(-2, 2, 2)
        alpha = rng.uniform(0.05, 1.0)
        _, margin = reduced_safe_condition(model, cbf, q, mu, alpha)
        direct = float(cbf.gradient(q) @ model.matrix(q) @ mu) + alpha * cbf.value(q)
        assert margin == pytest.approx(direct, abs=1e-14)


def test_reduced_safe_condition_linear_in_mu():
    # the grad-h A mu term is linear: margin(m1 + m2) = margin(m1) + margin(m2) - alpha h
    rng = np.random.default_rng(9)
    model = unicycle()
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    # distance barrier evaluated at planar slice of the unicycle config
    from veloshield import heading_cbf
    cbf = heading_cbf(Obstacle(np.array([0.0, 0.0]), 1.0), delta=0.3)
    alpha = 0.4
    for _ in range(50):
        q = rng.uniform([1.2, 1.2, -math.pi], [3, 3, math.pi])
        m1 = rng.uniform(-1, 1, 2)
        m2 = rng.uniform(-1, 1, 2)
        _, a = reduced_safe_condition(model, cbf, q, m1, alpha)
        _, b = reduced_safe_condition(model, cbf, q, m2, alpha)
        _, c = reduced_safe_condition(model, cbf, q, m1 + m2, alpha)
        h = cbf.value(q)
        assert c == pytest.approx(a + b - alpha * h, rel=1e-12, abs=1e-12)

"""Barrier functions: values, analytic gradients, bounds, composition."""
import math

import numpy as np
import pytest

from veloshield import (Obstacle, SingularGradientError, closest_obstacle_cbf,
                        distance_cbf, halfspace_cbf, heading_cbf,
                        heading_gradient_bound)
from helpers import fd_gradient


def test_distance_cbf_point_on_axis():
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    q = np.array([2.0, 0.0])
    assert cbf.value(q) == pytest.approx(1.0)
    assert cbf.gradient(q) == pytest.approx([1.0, 0.0])


def test_distance_cbf_boundary_point():
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    q = np.array([0.0, 1.0])
    assert cbf.value(q) == pytest.approx(0.0)
    assert cbf.gradient(q) == pytest.approx([0.0, 1.0])


def test_distance_cbf_345_triangle_gradient_vs_fd():
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 2.0))
    q = np.array([3.0, 4.0])
    assert cbf.value(q) == pytest.approx(3.0)
    assert cbf.gradient(q) == pytest.approx([0.6, 0.8])
    fd = fd_gradient(cbf.value, q, step=1e-6)
    assert np.allclose(cbf.gradient(q), fd, rtol=1e-5, atol=1e-9)


def test_distance_cbf_singular_at_center():
    cbf = distance_cbf(Obstacle(np.array([1.0, -2.0]), 0.5))
    with pytest.raises(SingularGradientError):
        cbf.gradient(np.array([1.0, -2.0]))


def test_distance_cbf_unit_gradient_everywhere():
    rng = np.random.default_rng(1)
    cbf = distance_cbf(Obstacle(np.array([0.3, -0.4]), 1.2))
    for _ in range(200):
        q = rng.uniform(-4, 4, 2)
        if np.allclose(q, [0.3, -0.4]):
            continue
        assert np.linalg.norm(cbf.gradient(q)) == pytest.approx(1.0, abs=1e-12)


def test_distance_cbf_gradient_jacobian_vs_fd():
    from helpers import fd_jacobian
    cbf = distance_cbf(Obstacle(np.array([0.5, 0.5]), 1.0))
    q = np.array([2.0, -1.0])
    fd = fd_jacobian(cbf.gradient, q, step=1e-6)
    assert np.allclose(cbf.gradient_jacobian(q), fd, atol=1e-7)


def test_heading_cbf_facing_obstacle():
    # heading straight at the obstacle: theta = 0, full penalty
    cbf = heading_cbf(Obstacle(np.array([2.0, 0.0]), 1.0), delta=0.5)
    assert cbf.value(np.array([0.0, 0.0, 0.0])) == pytest.approx(0.5)


def test_heading_cbf_facing_away():
    cbf = heading_cbf(Obstacle(np.array([2.0, 0.0]), 1.0), delta=0.5)
    assert cbf.value(np.array([0.0, 0.0, math.pi])) == pytest.approx(1.5)


def test_heading_cbf_gradient_vs_fd():
    cbf = heading_cbf(Obstacle(np.array([1.0, 1.0]), 0.5), delta=0.5)
    q = np.array([0.3, -0.2, 0.7])
    grad = cbf.gradient(q)
    fd = fd_gradient(cbf.value, q, step=1e-6)
    assert np.allclose(grad, fd, rtol=1e-5, atol=1e-9)


def test_heading_cbf_gradient_vs_fd_random_poses():
    rng = np.random.default_rng(7)
    cbf = heading_cbf(Obstacle(np.array([0.5, -1.0]), 0.8), delta=0.4)
    checked = 0
    while checked < 1000:
        q = rng.uniform([-4, -4, -math.pi], [4, 4, math.pi])
        if math.hypot(0.5 - q[0], -1.0 - q[1]) < 0.3:
            continue
        grad = cbf.gradient(q)
        fd = fd_gradient(cbf.value, q, step=1e-6)
        scale = max(1.0, np.linalg.norm(grad))
        assert np.linalg.norm(grad - fd) <= 1e-5 * scale
        checked += 1


def test_heading_cbf_singular_at_center():
    cbf = heading_cbf(Obstacle(np.array([1.0, 2.0]), 0.5), delta=0.5)
    with pytest.raises(SingularGradientError):
        cbf.gradient(np.array([1.0, 2.0, 0.3]))


def test_heading_gradient_bound_sampling_dominates_safe_set():
    # sampled bound (with its 1.1 factor) must cover the gradient norm at
    # every safe configuration drawn in the workspace
    obstacles = [Obstacle(np.array([2.0, 0.35]), 0.8)]
    delta = 0.5
    bound = heading_gradient_bound(obstacles, delta, [(-1.0, 5.0), (-3.0, 3.0)])
    cbf = heading_cbf(obstacles[0], delta)
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 2000:
        q = rng.uniform([-1, -3, -math.pi], [5, 3, math.pi])
        if cbf.value(q) < 0.0:
            continue
        assert np.linalg.norm(cbf.gradient(q)) <= bound
        checked += 1


def test_halfspace_cbf_wall():
    cbf = halfspace_cbf([1.0, 0.0], 2.0)
    assert cbf.value(np.array([0.5, 7.0])) == pytest.approx(1.5)
    assert cbf.gradient(np.array([0.5, 7.0])) == pytest.approx([-1.0, 0.0])
    assert cbf.gradient_bound == pytest.approx(1.0)


def test_closest_obstacle_nearer_dominates():
    obstacles = [Obstacle(np.array([0.0, 0.0]), 1.0),
                 Obstacle(np.array([10.0, 0.0]), 1.0)]
    cbf = closest_obstacle_cbf(obstacles, "distance")
    q = np.array([2.0, 0.0])
    assert cbf.active_index(q) == 0
    assert cbf.value(q) == pytest.approx(1.0)


def test_closest_obstacle_tie_breaks_to_lowest_index():
    obstacles = [Obstacle(np.array([0.0, 0.0]), 1.0),
                 Obstacle(np.array([10.0, 0.0]), 1.0)]
    cbf = closest_obstacle_cbf(obstacles, "distance")
    assert cbf.active_index(np.array([5.0, 0.0])) == 0


def test_closest_obstacle_matches_enumeration():
    rng = np.random.default_rng(3)
    obstacles = [Obstacle(rng.uniform(-3, 3, 2), rng.uniform(0.3, 1.5))
                 for _ in range(4)]
    composite = closest_obstacle_cbf(obstacles, "distance")
    members = [distance_cbf(o) for o in obstacles]
    for _ in range(100):
        q = rng.uniform(-5, 5, 2)
        brute = min(m.value(q) for m in members)
        assert composite.value(q) == pytest.approx(brute, abs=0.0)


def test_closest_obstacle_below_each_member_with_equality():
    rng = np.random.default_rng(4)
    obstacles = [Obstacle(rng.uniform(-3, 3, 2), rng.uniform(0.3, 1.5))
                 for _ in range(3)]
    composite = closest_obstacle_cbf(obstacles, "heading", delta=0.4)
    members = [heading_cbf(o, 0.4) for o in obstacles]
    for _ in range(100):
        q = rng.uniform([-5, -5, -math.pi], [5, 5, math.pi])
        values = [m.value(q) for m in members]
        h = composite.value(q)
        assert all(h <= v + 1e-15 for v in values)
        assert any(h == v for v in values)


def test_closest_obstacle_gradient_is_active_members():
    obstacles = [Obstacle(np.array([0.0, 0.0]), 1.0),
                 Obstacle(np.array([4.0, 0.0]), 1.0)]
    cbf = closest_obstacle_cbf(obstacles, "distance")
    q = np.array([3.0, 0.5])
    i = cbf.active_index(q)
    assert i == 1
    member = distance_cbf(obstacles[1])
    assert np.allclose(cbf.gradient(q), member.gradient(q))


def test_closest_obstacle_requires_nonempty_list():
    with pytest.raises(ValueError):
        closest_obstacle_cbf([], "distance")


def test_gradient_bound_holds_on_safe_samples_all_families():
    rng = np.random.default_rng(5)
    cases = [
        distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0)),
        halfspace_cbf([0.0, 1.0], 3.0),
        closest_obstacle_cbf([Obstacle(np.array([-1.0, 0.0]), 0.7),
                              Obstacle(np.array([1.5, 1.0]), 1.1)], "distance"),
    ]
    for cbf in cases:
        checked = 0
        while checked < 1000:
            q = rng.uniform(-4, 4, 2)
            if cbf.value(q) < 0.0:
                continue
            try:
                g = cbf.gradient(q)
            except SingularGradientError:
                continue
            assert np.linalg.norm(g) <= cbf.gradient_bound + 1e-12
            checked += 1

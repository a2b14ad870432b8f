"""Safe-velocity filters against independent projection/grid oracles."""
import math

import numpy as np
import pytest

from veloshield import (ConstantLaw, FilterWeights, InfeasibleFilterError,
                        Obstacle, ProportionalLaw, UnicycleGoalLaw,
                        desired_velocity, desired_velocity_jacobian,
                        distance_cbf, filter_single_integrator, filter_weighted,
                        heading_cbf, safe_velocity_jacobian, single_integrator,
                        unicycle)
from helpers import fd_jacobian


def halfspace_projection(v, a, b):
    """Euclidean projection of v onto {x : a.x >= b} (independent oracle)."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    gap = b - float(a @ v)
    if gap <= 0.0:
        return v.copy()
    return v + a * (gap / float(a @ a))


def weighted_boundary_oracle(mu_d, a, b, weights, steps=200001):
    """Grid-search oracle for min (mu-mu_d)'diag(w)(mu-mu_d) s.t. a.mu >= b.

    Uses only convexity: the minimizer is mu_d itself when feasible, and
    otherwise lies on the boundary line a.mu = b, which is searched with a
    fine one-dimensional grid. No KKT algebra is involved, so this is an
    independent check of the closed-form filter. Point accuracy is half a
    grid step along the line.
    """
    mu_d = np.asarray(mu_d, dtype=float)
    a = np.asarray(a, dtype=float)
    w = np.asarray(weights, dtype=float)
    if float(a @ mu_d) >= b:
        return mu_d.copy()
    p0 = a * (b / float(a @ a))
    tau = np.array([-a[1], a[0]]) / np.linalg.norm(a)
    reach = 4.0 + 3.0 * np.linalg.norm(mu_d - p0) * float(w.max() / w.min())
    ts = np.linspace(-reach, reach, steps)
    pts = p0[None, :] + ts[:, None] * tau[None, :]
    costs = w[0] * (pts[:, 0] - mu_d[0]) ** 2 + w[1] * (pts[:, 1] - mu_d[1]) ** 2
    return pts[int(np.argmin(costs))]


# --- desired-velocity laws ---

def test_proportional_law_direct_formula():
    law = ProportionalLaw(kp=0.2, goal=np.array([0.0, 0.0]), saturation=None)
    assert desired_velocity(law, [1.0, 0.0]) == pytest.approx([-0.2, 0.0])


def test_proportional_law_zero_at_goal():
    law = ProportionalLaw(kp=0.7, goal=np.array([2.0, -1.0]), saturation=1.0)
    assert desired_velocity(law, [2.0, -1.0]) == pytest.approx([0.0, 0.0])


def test_proportional_law_saturation_clamps_norm():
    law = ProportionalLaw(kp=1.0, goal=np.array([0.0, 0.0]), saturation=1.0)
    v = desired_velocity(law, [3.0, 4.0])
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert v == pytest.approx([-0.6, -0.8])


def test_unicycle_goal_law_hand_evaluation():
    law = UnicycleGoalLaw(kv=0.16, komega=0.8, goal=np.array([4.0, 1.0]),
                          saturation=None)
    x, y, psi = 1.0, -0.5, 0.4
    dg = math.hypot(4.0 - x, 1.0 - y)
    expected_v = 0.16 * dg
    expected_w = -0.8 * (math.sin(psi) - (1.0 - y) / dg)
    assert desired_velocity(law, [x, y, psi]) == pytest.approx(
        [expected_v, expected_w])


def test_unicycle_goal_law_zero_at_goal():
    law = UnicycleGoalLaw(kv=0.16, komega=0.8, goal=np.array([1.0, 2.0]))
    assert desired_velocity(law, [1.0, 2.0, 0.7]) == pytest.approx([0.0, 0.0])


def test_unicycle_goal_law_saturates_forward_speed():
    law = UnicycleGoalLaw(kv=1.0, komega=0.5, goal=np.array([10.0, 0.0]),
                          saturation=1.0)
    v, _ = desired_velocity(law, [0.0, 0.0, 0.0])
    assert v == pytest.approx(1.0)


def test_constant_law():
    law = ConstantLaw(value=np.array([0.3, -0.1]))
    assert desired_velocity(law, [9.0, 9.0]) == pytest.approx([0.3, -0.1])


# --- single-integrator filter ---

def test_filter_inactive_returns_desired():
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    q = np.array([2.0, 0.0])
    qd = np.array([0.5, 0.3])  # moving away
    assert filter_single_integrator(qd, cbf, q, 0.5) == pytest.approx(qd)


def test_filter_boundary_head_on_cancels_radial_component():
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    q = np.array([1.0, 0.0])  # on the boundary, h = 0
    qd = np.array([-1.0, 0.0])  # straight at the obstacle
    qs = filter_single_integrator(qd, cbf, q, 0.5)
    assert qs == pytest.approx([0.0, 0.0], abs=1e-15)


def test_filter_matches_projection_oracle_random():
    rng = np.random.default_rng(12)
    for _ in range(300):
        center = rng.uniform(-2, 2, 2)
        r = rng.uniform(0.3, 1.5)
        cbf = distance_cbf(Obstacle(center, r))
        q = center + rng.uniform(r * 0.5, r + 3.0) * _unit(rng)
        qd = rng.uniform(-2, 2, 2)
        alpha = rng.uniform(0.05, 1.5)
        qs = filter_single_integrator(qd, cbf, q, alpha)
        a = cbf.gradient(q)
        b = -alpha * cbf.value(q)
        oracle = halfspace_projection(qd, a, b)
        assert np.linalg.norm(qs - oracle) <= 1e-6


def _unit(rng):
    th = rng.uniform(0, 2 * math.pi)
    return np.array([math.cos(th), math.sin(th)])


def test_filter_constraint_satisfied_exactly():
    rng = np.random.default_rng(13)
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    for _ in range(500):
        q = rng.uniform(0.2, 4.0) * _unit(rng)
        qd = rng.uniform(-3, 3, 2)
        alpha = rng.uniform(0.05, 2.0)
        qs = filter_single_integrator(qd, cbf, q, alpha)
        margin = float(cbf.gradient(q) @ qs) + alpha * cbf.value(q)
        assert margin >= -1e-12


# --- weighted filter ---

def test_weighted_filter_inactive_case():
    model = unicycle()
    cbf = heading_cbf(Obstacle(np.array([5.0, 5.0]), 0.5), delta=0.3)
    mu_d = np.array([0.4, 0.1])
    out = filter_weighted(mu_d, model, cbf, [0.0, 0.0, 0.0], 0.5,
                          FilterWeights.unicycle(0.25))
    assert out == pytest.approx(mu_d)


def test_weighted_filter_specializes_to_single_integrator():
    model = single_integrator(2)
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    rng = np.random.default_rng(14)
    for _ in range(200):
        q = rng.uniform(0.2, 3.0) * _unit(rng)
        qd = rng.uniform(-2, 2, 2)
        alpha = rng.uniform(0.1, 1.0)
        a = filter_weighted(qd, model, cbf, q, alpha, FilterWeights.identity(2))
        b = filter_single_integrator(qd, cbf, q, alpha)
        assert np.allclose(a, b, atol=1e-14)


def test_weighted_filter_pinned_instance_vs_grid():
    # vehicle at the origin pointing at an obstacle ahead: the filter must
    # cut the forward velocity down to alpha*h
    model = unicycle()
    cbf = heading_cbf(Obstacle(np.array([2.0, 0.0]), 0.5), delta=0.5)
    q = np.array([0.0, 0.0, 0.0])
    mu_d = np.array([1.0, 0.0])
    weights = FilterWeights.unicycle(0.25)
    out = filter_weighted(mu_d, model, cbf, q, 0.2, weights)
    a = cbf.gradient(q) @ model.matrix(q)
    b = -0.2 * cbf.value(q)
    oracle = weighted_boundary_oracle(mu_d, a, b, weights.diagonal)
    assert np.linalg.norm(out - oracle) <= 2e-3
    assert out == pytest.approx([0.2, 0.0], abs=1e-12)


def test_weighted_filter_matches_boundary_oracle_random():
    model = unicycle()
    weights = FilterWeights.unicycle(0.25)
    rng = np.random.default_rng(15)
    for _ in range(100):
        center = rng.uniform(-1, 1, 2)
        cbf = heading_cbf(Obstacle(center, rng.uniform(0.3, 0.8)),
                          delta=rng.uniform(0.2, 0.6))
        q = np.array([*(center + rng.uniform(1.0, 3.0) * _unit(rng)),
                      rng.uniform(-math.pi, math.pi)])
        mu_d = rng.uniform(-1.5, 1.5, 2)
        alpha = rng.uniform(0.1, 1.0)
        out = filter_weighted(mu_d, model, cbf, q, alpha, weights)
        a = cbf.gradient(q) @ model.matrix(q)
        b = -alpha * cbf.value(q)
        oracle = weighted_boundary_oracle(mu_d, a, b, weights.diagonal)
        assert np.linalg.norm(out - oracle) <= 2e-3


def test_weighted_filter_complementary_slackness():
    model = unicycle()
    weights = FilterWeights.unicycle(0.3)
    rng = np.random.default_rng(16)
    for _ in range(300):
        center = rng.uniform(-1, 1, 2)
        cbf = heading_cbf(Obstacle(center, rng.uniform(0.3, 0.8)), delta=0.4)
        q = np.array([*(center + rng.uniform(0.9, 3.0) * _unit(rng)),
                      rng.uniform(-math.pi, math.pi)])
        mu_d = rng.uniform(-1.5, 1.5, 2)
        alpha = rng.uniform(0.1, 1.0)
        out = filter_weighted(mu_d, model, cbf, q, alpha, weights)
        margin = float(cbf.gradient(q) @ model.matrix(q) @ out) + alpha * cbf.value(q)
        assert margin >= -1e-12
        if not np.array_equal(out, mu_d):
            assert margin <= 1e-10


def test_weighted_filter_minimally_invasive():
    model = unicycle()
    weights = FilterWeights.unicycle(0.25)
    cbf = heading_cbf(Obstacle(np.array([1.5, 0.0]), 0.6), delta=0.5)
    q = np.array([0.0, 0.0, 0.1])
    mu_d = np.array([1.2, -0.4])
    alpha = 0.3
    out = filter_weighted(mu_d, model, cbf, q, alpha, weights)
    a = cbf.gradient(q) @ model.matrix(q)
    b = -alpha * cbf.value(q)
    w = weights.diagonal
    cost_out = float((out - mu_d) @ (w * (out - mu_d)))
    rng = np.random.default_rng(17)
    found = 0
    while found < 100:
        candidate = mu_d + rng.uniform(-2, 2, 2)
        if float(a @ candidate) < b:
            continue
        found += 1
        cost = float((candidate - mu_d) @ (w * (candidate - mu_d)))
        assert cost_out <= cost + 1e-12


def test_weighted_filter_infeasible_when_insensitive():
    # gradient orthogonal to every reduced direction: a = 0 with the
    # constraint active must raise
    from veloshield import BarrierFunction
    cbf = BarrierFunction(dim=3, value=lambda q: -1.0,
                          gradient=lambda q: np.zeros(3), gradient_bound=1.0)
    with pytest.raises(InfeasibleFilterError):
        filter_weighted(np.zeros(2), unicycle(), cbf, [0.0, 0.0, 0.0], 0.5,
                        FilterWeights.identity(2))


def test_filter_lipschitz_probe():
    # probe-based Lipschitz continuity away from switching surfaces;
    # L = 30 covers the sampled workspace (d >= 0.5, kp <= 0.5, alpha <= 1)
    from veloshield import closest_obstacle_cbf
    obstacles = [Obstacle(np.array([0.0, 0.0]), 0.8),
                 Obstacle(np.array([2.5, 1.0]), 0.6)]
    cbf = closest_obstacle_cbf(obstacles, "distance")
    law = ProportionalLaw(kp=0.5, goal=np.array([4.0, 0.0]), saturation=None)
    rng = np.random.default_rng(18)
    L = 30.0
    checked = 0
    while checked < 300:
        q = rng.uniform(-2, 4, 2)
        if min(np.linalg.norm(q - o.center) for o in obstacles) < 1.0:
            continue
        dq = 1e-4 * _unit(rng)
        q2 = q + dq
        if cbf.active_index(q) != cbf.active_index(q2):
            continue
        s1 = filter_single_integrator(desired_velocity(law, q), cbf, q, 0.8)
        s2 = filter_single_integrator(desired_velocity(law, q2), cbf, q2, 0.8)
        assert np.linalg.norm(s1 - s2) <= L * np.linalg.norm(dq)
        checked += 1


# --- analytic jacobian of the filtered velocity ---

def test_safe_velocity_jacobian_vs_fd():
    cbf = distance_cbf(Obstacle(np.array([0.0, 0.0]), 1.0))
    rng = np.random.default_rng(19)
    for law in (ProportionalLaw(kp=0.4, goal=np.array([3.0, 1.0]), saturation=None),
                ProportionalLaw(kp=1.5, goal=np.array([3.0, 1.0]), saturation=1.0),
                ConstantLaw(value=np.array([-0.7, 0.2]))):
        checked = 0
        while checked < 100:
            q = rng.uniform(0.3, 3.5) * _unit(rng)
            jac = safe_velocity_jacobian(law, cbf, 0.5, q)

            def qs_of(qq):
                return filter_single_integrator(
                    desired_velocity(law, qq), cbf, qq, 0.5)

            # skip probes that straddle the activation or saturation kink
            slack = -float(cbf.gradient(q) @ desired_velocity(law, q)) \
                - 0.5 * cbf.value(q)
            if abs(slack) < 1e-4:
                continue
            fd = fd_jacobian(qs_of, q, step=1e-7)
            assert np.allclose(jac, fd, atol=5e-6), (law, q)
            checked += 1


def test_desired_velocity_jacobian_vs_fd():
    rng = np.random.default_rng(20)
    for law in (ProportionalLaw(kp=0.4, goal=np.array([1.0, -2.0]), saturation=None),
                ProportionalLaw(kp=1.2, goal=np.array([1.0, -2.0]), saturation=0.8)):
        for _ in range(50):
            q = rng.uniform(-4, 4, 2)
            raw = -law.kp * (q - law.goal)
            if law.saturation is not None and abs(np.linalg.norm(raw) - law.saturation) < 1e-4:
                continue
            jac = desired_velocity_jacobian(law, q)
            fd = fd_jacobian(lambda qq: desired_velocity(law, qq), q, step=1e-7)
            assert np.allclose(jac, fd, atol=5e-6)

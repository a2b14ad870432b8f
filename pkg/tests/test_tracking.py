"""Velocity-tracking controllers and Lyapunov machinery."""
import math

import numpy as np
import pytest

import veloshield as vs
from veloshield import (SegwayGains, UnsupportedSystemError, Workspace,
                        computed_torque_controller, d_controller,
                        d_gravity_controller, double_integrator_system,
                        fit_decay_envelope, inertia_eigen_range,
                        lyapunov_rate_analytic, lyapunov_value, planar_segway,
                        segway_planar_controller, segway_spatial_controller,
                        two_link_arm)
from helpers import arm_scenario, central_rate, di_scenario

ARM_WS = Workspace(bounds=((-math.pi, math.pi), (-math.pi, math.pi)), resolution=1e-3)


def arm_lambda_k(gain):
    system = two_link_arm()
    lo, hi = inertia_eigen_range(system, ARM_WS)
    return gain / hi, math.sqrt(lo / 2), math.sqrt(hi / 2)


# --- controller formulas ---

def test_d_controller_zero_error():
    assert d_controller(np.eye(2), np.zeros(2)) == pytest.approx([0.0, 0.0])


def test_d_controller_identity_gain():
    assert d_controller(np.eye(2), np.array([1.0, 0.0])) == pytest.approx([-1.0, 0.0])


def test_d_gravity_holds_equilibrium():
    system = two_link_arm()
    q = np.array([0.4, -0.9])
    u = d_gravity_controller(system, 3.0 * np.eye(2), q, np.zeros(2))
    assert u == pytest.approx(system.gravity(q))
    acc = vs.accel(system, q, np.zeros(2), u)
    assert acc == pytest.approx([0.0, 0.0], abs=1e-12)


def test_d_gravity_reduces_to_d_without_gravity():
    system = double_integrator_system(2)
    e = np.array([0.3, -0.7])
    K = np.diag([2.0, 1.5])
    assert d_gravity_controller(system, K, np.zeros(2), e) == pytest.approx(
        d_controller(K, e))


def test_d_gravity_rejects_underactuated_system():
    with pytest.raises(UnsupportedSystemError):
        d_gravity_controller(planar_segway(), np.eye(2), np.zeros(2), np.zeros(2))


def test_computed_torque_reduces_to_d_gravity_for_steady_command():
    system = double_integrator_system(2)
    e = np.array([0.2, 0.1])
    K = 1.7 * np.eye(2)
    u_ct = computed_torque_controller(system, K, np.zeros(2), np.array([0.5, 0.5]),
                                      np.array([0.5, 0.4]), np.zeros(2), e)
    u_dg = d_gravity_controller(system, K, np.zeros(2), e)
    assert u_ct == pytest.approx(u_dg)


def test_computed_torque_feedforward_exactness():
    # start exactly on the commanded velocity: the error must stay ~0
    scn = arm_scenario(controller="computed_torque", gain=5.0,
                       mu=(0.4, -0.3), v0=(0.4, -0.3), duration=1.0)
    log = vs.simulate(scn)
    assert float(np.abs(log.e).max()) <= 1e-8


def test_computed_torque_exponential_error_decay():
    # V(t) <= V(0) exp(-lam t) within a 1e-6 relative allowance; the run is
    # short enough that the bound stays above the double-precision floor
    scn = arm_scenario(controller="computed_torque", gain=6.0,
                       v0=(1.2, -0.8), duration=2.5)
    log = vs.simulate(scn)
    lam, _, _ = arm_lambda_k(6.0)
    bound = log.V[0] * np.exp(-lam * log.t) * (1 + 1e-6) + 1e-13
    assert np.all(log.V <= bound)


def test_error_norm_bound_k2_over_k1():
    # ||e(t)|| <= (k2/k1) ||e(0)|| exp(-lam t) for the exact-feedforward loop
    scn = arm_scenario(controller="computed_torque", gain=7.0,
                       v0=(1.0, 1.0), duration=2.5)
    log = vs.simulate(scn)
    lam, k1, k2 = arm_lambda_k(7.0)
    e = np.sqrt((log.e ** 2).sum(axis=1))
    bound = (k2 / k1) * e[0] * np.exp(-lam * log.t) * (1 + 1e-6) + 1e-13
    assert np.all(e <= bound)


def test_segway_planar_controller_zero_cases():
    gains = SegwayGains()
    assert segway_planar_controller(gains, 0, 0, 0, 0) == 0.0
    assert segway_planar_controller(gains, 1.0, 1.0, 0.0, 0.0) == 0.0


def test_segway_planar_controller_clamps():
    gains = SegwayGains()
    assert segway_planar_controller(gains, 1.0, 0.0, 0.0, 0.0) == 20.0
    assert segway_planar_controller(gains, -1.0, 0.0, 0.0, 0.0) == -20.0


def test_segway_spatial_controller_yaw_term():
    gains = SegwayGains()
    u1, u2 = segway_spatial_controller(gains, 0.1, 0.1, 0.0, 0.0, 0.5, 0.5)
    assert u1 == u2  # no differential command when yaw rate matches
    u1, u2 = segway_spatial_controller(gains, 0, 0, 0, 0, 0.1, 0.0)
    assert u1 == -u2 != 0.0
    assert segway_spatial_controller(gains, 0, 0, 0, 0, 0, 0) == (0.0, 0.0)


# --- Lyapunov machinery ---

def test_lyapunov_value_zero_error():
    assert lyapunov_value(planar_segway(), np.zeros(2), np.zeros(2)) == 0.0


def test_lyapunov_value_identity_inertia():
    system = double_integrator_system(2)
    assert lyapunov_value(system, np.zeros(2), np.array([1.0, 1.0])) == pytest.approx(1.0)


def test_lyapunov_value_identity_weight_without_system():
    assert lyapunov_value(None, None, np.array([1.0, 1.0])) == pytest.approx(1.0)


def test_lyapunov_rate_analytic_cross_check():
    # paper-form rate vs direct differentiation through the error dynamics
    system = two_link_arm()
    K = 4.0 * np.eye(2)
    mu = np.array([0.3, -0.2])
    rng = np.random.default_rng(30)
    for _ in range(200):
        q = rng.uniform(-2, 2, 2)
        qd = rng.uniform(-2, 2, 2)
        e = qd - mu
        if np.linalg.norm(e) < 1e-6:
            continue
        u = d_controller(K, e)
        d = -system.C(q, qd) @ mu - system.gravity(q)
        rate = lyapunov_rate_analytic(system, q, e, K, d)
        # direct: Vdot = (e' D edot + e' Ddot e / 2) / (2V)
        acc = vs.accel(system, q, qd, u)
        edot = acc  # mu constant
        V = lyapunov_value(system, q, e)
        direct = (float(e @ system.mass_matrix(q) @ edot)
                  + 0.5 * float(e @ system.mass_matrix_rate(q, qd) @ e)) / (2 * V)
        assert rate == pytest.approx(direct, abs=1e-8 * max(1.0, abs(direct)))


def test_lyapunov_rate_analytic_zero_at_zero_error():
    assert lyapunov_rate_analytic(two_link_arm(), np.zeros(2), np.zeros(2),
                                  np.eye(2), np.zeros(2)) == 0.0


def test_iss_rate_bound_d_gravity_sampled_states():
    # closed-loop FD rate of V obeys the ISS inequality at >= 1000 samples
    scn = arm_scenario(controller="d_gravity", gain=6.0, v0=(1.5, -1.0),
                       duration=3.0)
    log = vs.simulate(scn)
    system = two_link_arm()
    lam, k1, _ = arm_lambda_k(6.0)
    mu = np.array(scn.desired.value)
    d_norms = np.array([np.linalg.norm(-system.C(q, qd) @ mu)
                        for q, qd in zip(log.q, log.qdot)])
    iota = float(d_norms.max()) / (2 * k1)
    vdot = central_rate(log.t, log.V)
    margins = -lam * log.V[1:-1] + iota - vdot
    assert margins.size >= 1000
    assert np.all(margins >= -1e-5)


def test_fit_decay_envelope_recovers_exponential():
    t = np.linspace(0, 5, 2001)
    e = 2.0 * np.exp(-1.3 * t)
    M, lam = fit_decay_envelope(t, e)
    assert lam == pytest.approx(1.3, rel=1e-6)
    assert M == pytest.approx(1.0, rel=1e-6)


def test_fit_decay_envelope_is_valid_bound():
    rng = np.random.default_rng(31)
    t = np.linspace(0, 6, 3001)
    for _ in range(20):
        e = (rng.uniform(0.5, 2.0) * np.exp(-rng.uniform(0.3, 2.0) * t)
             * (1.0 + 0.5 * np.sin(rng.uniform(1, 9) * t))
             + rng.uniform(0, 1e-3))
        e[0] = max(e[0], 1e-6)
        M, lam = fit_decay_envelope(t, e)
        assert np.all(e <= M * e[0] * np.exp(-lam * t) * (1 + 1e-12))


def test_fit_decay_envelope_degenerate_cases():
    t = np.linspace(0, 1, 101)
    assert fit_decay_envelope(t, np.zeros(101)) == (1.0, 0.0)
    M, _ = fit_decay_envelope(t, np.concatenate([[0.0], np.ones(100)]))
    assert M == math.inf


def test_controller_lipschitz_probe():
    # computed torque through the filtered-velocity feedforward stays
    # Lipschitz in the state away from activation kinks
    scn = di_scenario(obstacles=[(0.0, 0.0, 1.0)], kp=0.4, goal=(3.0, 0.5),
                      controller="computed_torque", gain=1.5)
    from veloshield import (distance_cbf, Obstacle, safe_velocity_jacobian,
                            filter_single_integrator, desired_velocity)
    from veloshield.sim import desired_law_object, barrier_object
    law = desired_law_object(scn)
    cbf = barrier_object(scn)
    rng = np.random.default_rng(32)
    L = 80.0
    checked = 0
    while checked < 200:
        q = rng.uniform(1.3, 4.0) * np.array([math.cos(a := rng.uniform(0, 2 * math.pi)),
                                              math.sin(a)])
        v = rng.uniform(-1, 1, 2)
        dq = 1e-4 * rng.standard_normal(4)

        def u_of(qq, vv):
            qs = filter_single_integrator(desired_velocity(law, qq), cbf, qq, scn.alpha)
            ff = safe_velocity_jacobian(law, cbf, scn.alpha, qq) @ vv
            return ff - 1.5 * (vv - qs)

        slack = -float(cbf.gradient(q) @ desired_velocity(law, q)) - scn.alpha * cbf.value(q)
        if abs(slack) < 1e-3:
            continue
        u1 = u_of(q, v)
        u2 = u_of(q + dq[:2], v + dq[2:])
        assert np.linalg.norm(u1 - u2) <= L * np.linalg.norm(dq)
        checked += 1

"""Velocity-tracking controllers and the associated Lyapunov machinery.

The tracking error is e = qdot - qdot_s (or qdot - A(q) mu_s). Three
controller families drive it to zero on fully-actuated systems:

* D controller            u = -K_D e                      (model-free)
* D + gravity             u = B^-1 (G(q) - K e)
* computed torque         u = B^-1 (D qddot_s + C qdot_s + G - K e)

The balancing-robot laws are scenario-specific tracking laws for the
underactuated wheel/pitch models; their decay rate is estimated
empirically from the error envelope rather than from gain/inertia ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dynamics import MechanicalSystem
from .errors import UnsupportedSystemError

__all__ = [
    "SegwayGains",
    "d_controller",
    "d_gravity_controller",
    "computed_torque_controller",
    "segway_planar_controller",
    "segway_spatial_controller",
    "lyapunov_value",
    "lyapunov_rate_analytic",
    "fit_decay_envelope",
]


@dataclass(frozen=True)
class SegwayGains:
    """Wheel-voltage gains of the balancing-robot tracking laws."""

    k_pdot: float = 50.0     # V s / m
    k_phi: float = 150.0     # V / rad
    k_phidot: float = 40.0   # V s / rad
    k_psidot: float = 10.0   # V s / rad, spatial law only
    u_max: float = 20.0      # V


def d_controller(K_D: np.ndarray, e) -> np.ndarray:
    """Model-free velocity damping u = -K_D e."""
    return -np.asarray(K_D, dtype=float) @ np.asarray(e, dtype=float)


def _inverse_input_matrix(system: MechanicalSystem) -> np.ndarray:
    if system.n != system.m:
        raise UnsupportedSystemError("controller requires a fully actuated system (n = m)")
    B = system.input_matrix
    if abs(np.linalg.det(B)) < 1e-12:
        raise UnsupportedSystemError("controller requires an invertible input matrix")
    return np.linalg.inv(B)


def d_gravity_controller(system: MechanicalSystem, K: np.ndarray, q, e) -> np.ndarray:
    """Velocity damping with gravity compensation, u = B^-1 (G(q) - K e)."""
    Binv = _inverse_input_matrix(system)
    q = np.asarray(q, dtype=float)
    return Binv @ (system.gravity(q) - np.asarray(K, dtype=float) @ np.asarray(e, dtype=float))


def computed_torque_controller(system: MechanicalSystem, K: np.ndarray, q, qdot,
                               qdot_s, qddot_s, e) -> np.ndarray:
    """Model-based feedforward plus damping.

    u = B^-1 (D(q) qddot_s + C(q, qdot) qdot_s + G(q) - K e). The safe
    acceleration qddot_s is supplied by the caller (exact chain-rule value
    or a causal finite difference, per the simulation configuration).
    """
    Binv = _inverse_input_matrix(system)
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    feed = (system.mass_matrix(q) @ np.asarray(qddot_s, dtype=float)
            + system.C(q, qdot) @ np.asarray(qdot_s, dtype=float)
            + system.gravity(q))
    return Binv @ (feed - np.asarray(K, dtype=float) @ np.asarray(e, dtype=float))


def _clamp(value: float, limit: float) -> float:
    if value > limit:
        return limit
    if value < -limit:
        return -limit
    return value


def segway_planar_controller(gains: SegwayGains, pdot: float, pdot_s: float,
                             phi: float, phidot: float) -> float:
    """Planar balancing law u = K_pdot (pdot - pdot_s) + K_phi phi + K_phidot phidot.

    Tracks the safe forward velocity while stabilizing the upright pitch;
    the output is clamped to the voltage bound.
    """
    u = gains.k_pdot * (pdot - pdot_s) + gains.k_phi * phi + gains.k_phidot * phidot
    return _clamp(u, gains.u_max)


def segway_spatial_controller(gains: SegwayGains, pdot: float, v_s: float,
                              phi: float, phidot: float, psidot: float,
                              omega_s: float) -> Tuple[float, float]:
    """Two-wheel balancing law with a differential yaw-rate term.

    u_{1,2} = K_pdot (pdot - v_s) + K_phi phi + K_phidot phidot
              +/- K_psidot (psidot - omega_s), each clamped.
    """
    common = gains.k_pdot * (pdot - v_s) + gains.k_phi * phi + gains.k_phidot * phidot
    yaw = gains.k_psidot * (psidot - omega_s)
    return _clamp(common + yaw, gains.u_max), _clamp(common - yaw, gains.u_max)


def lyapunov_value(system: Optional[MechanicalSystem], q, e) -> float:
    """Tracking-energy Lyapunov value V = sqrt(e' D(q) e / 2).

    With ``system=None`` the inertia weight is the identity (used for
    kinematic scenarios and the composed spatial model, whose tracking
    error has no single mass matrix).
    """
    e = np.asarray(e, dtype=float)
    if system is None:
        return math.sqrt(0.5 * float(e @ e))
    D = system.mass_matrix(np.asarray(q, dtype=float))
    return math.sqrt(0.5 * float(e @ D @ e))


def lyapunov_rate_analytic(system: MechanicalSystem, q, e, K: np.ndarray,
                           disturbance) -> float:
    """Analytic rate of V along the closed loop of the damping controllers.

    Vdot = (-e'(K + C_damp(q)) e + e' d) / (2 V), where d collects every
    forcing term other than -C e - K e (for the plain D controller,
    d = -D qddot_s - C qdot_s - G plus any injected input disturbance).
    The quadratic Coriolis term cancels exactly by skew-symmetry and is
    omitted. Returns 0 at e = 0 where V is not differentiable.
    """
    e = np.asarray(e, dtype=float)
    V = lyapunov_value(system, q, e)
    if V == 0.0:
        return 0.0
    q = np.asarray(q, dtype=float)
    K = np.asarray(K, dtype=float)
    d = np.asarray(disturbance, dtype=float)
    return (-float(e @ (K + system.damping(q)) @ e) + float(e @ d)) / (2.0 * V)


def fit_decay_envelope(t: np.ndarray, e_norms: np.ndarray) -> Tuple[float, float]:
    """Fit (M, lam) with ||e(t)|| <= M ||e(0)|| exp(-lam t) along a log.

    The monotone envelope E(t) = max_{s >= t} ||e(s)|| is fit log-linearly
    for the rate, then M is raised to the smallest value making the bound
    hold at every sample, so the returned pair is a valid envelope by
    construction. Returns (1, 0) for an identically-zero error and
    (inf, lam) when e(0) = 0 but the error later grows.
    """
    t = np.asarray(t, dtype=float)
    e_norms = np.asarray(e_norms, dtype=float)
    envelope = np.maximum.accumulate(e_norms[::-1])[::-1]
    peak = float(envelope.max())
    if peak <= 0.0:
        return 1.0, 0.0
    mask = envelope > peak * 1e-12
    logs = np.log(envelope[mask])
    slope = np.polyfit(t[mask], logs, 1)[0] if mask.sum() >= 2 else 0.0
    lam = max(0.0, -float(slope))
    e0 = float(e_norms[0])
    if e0 == 0.0:
        return math.inf, lam
    M = float(np.max(envelope * np.exp(lam * t))) / e0
    return M, lam

"""Safe-velocity synthesis: minimally invasive modification of a desired
velocity subject to a single barrier constraint.

Both filters solve a one-constraint quadratic program in closed form from
its KKT conditions; no iterative solver is involved, so the output is
exact, deterministic, and cheap enough for the inner simulation loop.

``filter_single_integrator`` handles the unweighted Euclidean projection
for barriers with unit gradient; ``filter_weighted`` handles a general
reduced-order model and a positive-definite diagonal weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .barriers import BarrierFunction
from .errors import InfeasibleFilterError
from .reduced import ReducedOrderModel

__all__ = [
    "ProportionalLaw",
    "UnicycleGoalLaw",
    "ConstantLaw",
    "DesiredVelocityLaw",
    "FilterWeights",
    "desired_velocity",
    "desired_velocity_jacobian",
    "filter_single_integrator",
    "filter_weighted",
    "safe_velocity_jacobian",
]


@dataclass(frozen=True)
class ProportionalLaw:
    """Goal-seeking law qdot_d = -kp (q - goal), norm-clamped to saturation."""

    kp: float
    goal: np.ndarray
    saturation: Optional[float] = 1.0

    def __post_init__(self):
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        if not self.kp > 0:
            raise ValueError("kp must be positive")
        if self.saturation is not None and not self.saturation > 0:
            raise ValueError("saturation must be positive")


@dataclass(frozen=True)
class UnicycleGoalLaw:
    """Goal-seeking forward velocity and yaw rate for a (x, y, psi) vehicle.

    v_d = kv * d_g and omega_d = -komega * (sin psi - (y_g - y)/d_g), with
    d_g the planar distance to the goal. At d_g = 0 the law returns zero
    input (goal reached). Saturation clamps the forward velocity.
    """

    kv: float
    komega: float
    goal: np.ndarray
    saturation: Optional[float] = 1.0

    def __post_init__(self):
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float)[:2])
        if not (self.kv > 0 and self.komega > 0):
            raise ValueError("gains must be positive")
        if self.saturation is not None and not self.saturation > 0:
            raise ValueError("saturation must be positive")


@dataclass(frozen=True)
class ConstantLaw:
    """Fixed desired velocity or reduced input."""

    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))


DesiredVelocityLaw = Union[ProportionalLaw, UnicycleGoalLaw, ConstantLaw]


def desired_velocity(law: DesiredVelocityLaw, q) -> np.ndarray:
    """Evaluate a desired-velocity law at configuration q."""
    q = np.asarray(q, dtype=float)
    if isinstance(law, ProportionalLaw):
        v = -law.kp * (q - law.goal)
        if law.saturation is not None:
            norm = float(np.linalg.norm(v))
            if norm > law.saturation:
                v = v * (law.saturation / norm)
        return v
    if isinstance(law, UnicycleGoalLaw):
        x, y, psi = (float(c) for c in q[:3])
        dg = math.hypot(law.goal[0] - x, law.goal[1] - y)
        if dg == 0.0:
            return np.zeros(2)
        v = law.kv * dg
        if law.saturation is not None and v > law.saturation:
            v = law.saturation
        omega = -law.komega * (math.sin(psi) - (law.goal[1] - y) / dg)
        return np.array([v, omega])
    if isinstance(law, ConstantLaw):
        return law.value.copy()
    raise TypeError(f"unknown law type {type(law).__name__}")


def desired_velocity_jacobian(law: DesiredVelocityLaw, q) -> np.ndarray:
    """d(qdot_d)/dq for laws expressed directly in configuration space."""
    q = np.asarray(q, dtype=float)
    n = q.size
    if isinstance(law, ConstantLaw):
        return np.zeros((n, n))
    if isinstance(law, ProportionalLaw):
        raw = -law.kp * (q - law.goal)
        jac = -law.kp * np.eye(n)
        if law.saturation is not None:
            norm = float(np.linalg.norm(raw))
            if norm > law.saturation:
                w = raw / norm
                jac = (law.saturation / norm) * (np.eye(n) - np.outer(w, w)) @ jac
        return jac
    raise TypeError(f"no configuration-space jacobian for {type(law).__name__}")


@dataclass(frozen=True)
class FilterWeights:
    """Positive-definite diagonal weight on the reduced input deviation."""

    diagonal: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=float)
        if diag.ndim != 1 or not (diag > 0).all():
            raise ValueError("weights must be a vector of positive entries")
        object.__setattr__(self, "diagonal", diag)

    @classmethod
    def identity(cls, k: int) -> "FilterWeights":
        return cls(np.ones(k))

    @classmethod
    def unicycle(cls, radius: float) -> "FilterWeights":
        """diag{1, R^2}: trades yaw rate against forward velocity at scale R."""
        return cls(np.array([1.0, float(radius) ** 2]))


def filter_single_integrator(qdot_d, cbf: BarrierFunction, q, alpha: float) -> np.ndarray:
    """Safe velocity for the single-integrator model and a unit-gradient barrier.

    qdot_s = qdot_d + max{-n.qdot_d - alpha*h, 0} * n with n = grad h(q).
    Exact minimizer of ||qdot_s - qdot_d||^2 subject to n.qdot_s >= -alpha*h
    when ||n|| = 1 (distance and unit-normal halfspace barriers).
    """
    q = np.asarray(q, dtype=float)
    qdot_d = np.asarray(qdot_d, dtype=float)
    n = cbf.gradient(q)
    slack = -float(n @ qdot_d) - alpha * cbf.value(q)
    if slack > 0.0:
        return qdot_d + slack * n
    return qdot_d.copy()


def filter_weighted(mu_d, model: ReducedOrderModel, cbf: BarrierFunction,
                    q, alpha: float, weights: FilterWeights) -> np.ndarray:
    """Safe reduced input minimizing (mu - mu_d)' Gamma (mu - mu_d).

    Single-constraint weighted projection: with a = grad h(q) A(q) and
    b = -alpha*h(q), the solution is mu_d when a.mu_d >= b and otherwise

        mu_s = mu_d + Gamma^-1 a' (b - a.mu_d) / (a Gamma^-1 a').

    Raises :class:`InfeasibleFilterError` when the constraint is active but
    a = 0, i.e. the reduced input cannot influence the barrier.
    """
    q = np.asarray(q, dtype=float)
    mu_d = np.asarray(mu_d, dtype=float)
    a = cbf.gradient(q) @ model.matrix(q)
    b = -alpha * cbf.value(q)
    residual = b - float(a @ mu_d)
    if residual <= 0.0:
        return mu_d.copy()
    ginv_a = a / weights.diagonal
    denom = float(a @ ginv_a)
    if denom == 0.0:
        raise InfeasibleFilterError("barrier constraint is active but insensitive to the reduced input")
    return mu_d + ginv_a * (residual / denom)


def safe_velocity_jacobian(law: DesiredVelocityLaw, cbf: BarrierFunction,
                           alpha: float, q) -> np.ndarray:
    """d(qdot_s)/dq of the single-integrator filter, by the chain rule.

    Valid away from the constraint-activation surface and obstacle-switch
    surfaces (one-sided value on them). Requires the barrier to provide
    ``gradient_jacobian``. The time derivative of the safe velocity along a
    trajectory is then J(q) qdot, which feeds exact feedforward terms.
    """
    if cbf.gradient_jacobian is None:
        raise ValueError("barrier does not provide a gradient jacobian")
    q = np.asarray(q, dtype=float)
    qdot_d = desired_velocity(law, q)
    jac_d = desired_velocity_jacobian(law, q)
    g = cbf.gradient(q)
    slack = -float(g @ qdot_d) - alpha * cbf.value(q)
    if slack <= 0.0:
        return jac_d
    jac_g = cbf.gradient_jacobian(q)
    grad_slack = -(g @ jac_d + qdot_d @ jac_g) - alpha * g
    return jac_d + np.outer(g, grad_slack) + slack * jac_g

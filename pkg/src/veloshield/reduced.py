"""Reduced-order kinematic models qdot = A(q) mu.

Safety is synthesized on these models: a reduced input mu is safe for a
barrier h when grad h(q) A(q) mu >= -alpha h(q). The full-order system then
only has to track the velocity A(q) mu.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import math

import numpy as np

from .barriers import BarrierFunction

__all__ = [
    "ReducedOrderModel",
    "single_integrator",
    "unicycle",
    "single_axis",
    "reduced_safe_condition",
]


@dataclass(frozen=True)
class ReducedOrderModel:
    """Map A(q) from a k-dimensional reduced input to configuration velocity."""

    dim: int
    input_dim: int
    matrix: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def velocity(self, q, mu) -> np.ndarray:
        """Configuration velocity A(q) mu."""
        return self.matrix(np.asarray(q, dtype=float)) @ np.asarray(mu, dtype=float)


def single_integrator(n: int) -> ReducedOrderModel:
    """Identity model qdot = mu in n dimensions."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    eye = np.eye(n)

    def matrix(q):
        return eye

    return ReducedOrderModel(dim=n, input_dim=n, matrix=matrix, name="single_integrator")


def unicycle() -> ReducedOrderModel:
    """Unicycle model for q = (x, y, psi), mu = (v, omega).

    A(q) = [[cos psi, 0], [sin psi, 0], [0, 1]].
    """

    def matrix(q):
        psi = float(q[2])
        return np.array([[math.cos(psi), 0.0],
                         [math.sin(psi), 0.0],
                         [0.0, 1.0]])

    return ReducedOrderModel(dim=3, input_dim=2, matrix=matrix, name="unicycle")


def single_axis(n: int, axis: int = 0) -> ReducedOrderModel:
    """Scalar input driving one configuration coordinate (others free).

    Used when the safe velocity constrains a single coordinate, e.g. the
    wheel position of a balancing robot while the pitch is left to the
    tracking controller.
    """
    if not 0 <= axis < n:
        raise ValueError("axis out of range")
    col = np.zeros((n, 1))
    col[axis, 0] = 1.0

    def matrix(q):
        return col

    return ReducedOrderModel(dim=n, input_dim=1, matrix=matrix, name="single_axis")


def reduced_safe_condition(model: ReducedOrderModel, cbf: BarrierFunction,
                           q, mu, alpha: float) -> Tuple[bool, float]:
    """Margin of the reduced-order safety condition.

    Returns ``(satisfied, margin)`` with
    margin = grad h(q) A(q) mu + alpha h(q); the input is safe at q when the
    margin is >= 0.
    """
    q = np.asarray(q, dtype=float)
    margin = float(cbf.gradient(q) @ model.matrix(q) @ np.asarray(mu, dtype=float)
                   + alpha * cbf.value(q))
    return margin >= 0.0, margin

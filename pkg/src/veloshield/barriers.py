"""Configuration-space barrier functions.

A barrier function h maps a configuration q to a scalar; the safe set is
{q : h(q) >= 0}. Each barrier carries its analytic gradient and a bound
C_h on the gradient norm over the safe portion of the declared workspace.

Three families are provided:

* ``distance_cbf`` -- clearance to a circular obstacle, h = ||q - q_o|| - r,
* ``heading_cbf``  -- clearance shaped by the heading of a (x, y, psi)
  vehicle, h = d - r - delta * cos(psi - theta),
* ``halfspace_cbf`` -- affine wall constraint, h = offset - n.q.

``closest_obstacle_cbf`` composes one family over several obstacles by
taking the pointwise minimum; the gradient is that of the active
(minimizing) obstacle and ties go to the lowest obstacle index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SingularGradientError

__all__ = [
    "Obstacle",
    "BarrierFunction",
    "distance_cbf",
    "heading_cbf",
    "halfspace_cbf",
    "closest_obstacle_cbf",
    "heading_gradient_bound",
]


@dataclass(frozen=True)
class Obstacle:
    """Circular obstacle: planar center (m) and radius (m)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if center.shape != (2,):
            raise ValueError("obstacle center must be a 2-vector")
        if not self.radius > 0:
            raise ValueError("obstacle radius must be positive")
        object.__setattr__(self, "center", center)


@dataclass(frozen=True)
class BarrierFunction:
    """Scalar barrier h with analytic gradient and gradient-norm bound.

    ``gradient_jacobian``, when present, returns d(grad h)/dq and enables
    exact chain-rule differentiation of filtered velocities.
    ``active_index`` identifies the minimizing obstacle of a composite
    barrier (0 for simple barriers).
    """

    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    gradient_bound: float
    active_index: Callable[[np.ndarray], int] = field(default=lambda q: 0)
    gradient_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, q) -> float:
        return self.value(np.asarray(q, dtype=float))


def distance_cbf(obstacle: Obstacle) -> BarrierFunction:
    """Clearance barrier h(q) = ||q - q_o|| - r for a planar point robot.

    The gradient is the unit vector from the obstacle center to the robot,
    so the gradient-norm bound is exactly 1. Evaluating the gradient at the
    obstacle center raises :class:`SingularGradientError`.
    """
    center = obstacle.center
    r = float(obstacle.radius)

    def value(q):
        q = np.asarray(q, dtype=float)
        return float(np.linalg.norm(q[:2] - center)) - r

    def gradient(q):
        q = np.asarray(q, dtype=float)
        diff = q[:2] - center
        d = float(np.linalg.norm(diff))
        if d == 0.0:
            raise SingularGradientError("distance barrier gradient undefined at the obstacle center")
        g = np.zeros_like(q)
        g[:2] = diff / d
        return g

    def jacobian(q):
        q = np.asarray(q, dtype=float)
        diff = q[:2] - center
        d = float(np.linalg.norm(diff))
        if d == 0.0:
            raise SingularGradientError("distance barrier gradient undefined at the obstacle center")
        n = diff / d
        jac = np.zeros((q.size, q.size))
        jac[:2, :2] = (np.eye(2) - np.outer(n, n)) / d
        return jac

    return BarrierFunction(dim=2, value=value, gradient=gradient,
                           gradient_bound=1.0, gradient_jacobian=jacobian)


def heading_cbf(obstacle: Obstacle, delta: float,
                gradient_bound: Optional[float] = None) -> BarrierFunction:
    """Heading-aware barrier for a (x, y, psi) vehicle.

    h(q) = d - r - delta * cos(psi - theta), where d is the planar distance
    to the obstacle center and theta = atan2(y_o - y, x_o - x) is the angle
    toward the obstacle. The two-argument arctangent keeps theta valid in
    all quadrants. The gradient accounts for the dependence of theta on
    (x, y):

        dh/dx   = -dx/d - delta*sin(psi - theta)*dy/d^2
        dh/dy   = -dy/d + delta*sin(psi - theta)*dx/d^2
        dh/dpsi =  delta*sin(psi - theta)

    with (dx, dy) = obstacle center minus robot position.

    ``gradient_bound`` defaults to a closed-over-estimate for points with
    d >= r; pass the value from :func:`heading_gradient_bound` to use the
    declared-workspace sampling procedure instead.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    ox, oy = obstacle.center
    r = float(obstacle.radius)
    delta = float(delta)

    if gradient_bound is None:
        # sup over d >= r of sqrt(1 + (delta*s/d)^2 + (delta*s)^2), |s| <= 1
        gradient_bound = math.sqrt(1.0 + (delta / r) ** 2 + delta ** 2)

    def value(q):
        x, y, psi = (float(v) for v in np.asarray(q, dtype=float)[:3])
        dx = ox - x
        dy = oy - y
        d = math.sqrt(dx * dx + dy * dy)
        theta = math.atan2(dy, dx)
        return d - r - delta * math.cos(psi - theta)

    def gradient(q):
        x, y, psi = (float(v) for v in np.asarray(q, dtype=float)[:3])
        dx = ox - x
        dy = oy - y
        d2 = dx * dx + dy * dy
        d = math.sqrt(d2)
        if d == 0.0:
            raise SingularGradientError("heading barrier gradient undefined at the obstacle center")
        theta = math.atan2(dy, dx)
        s = math.sin(psi - theta)
        g = np.zeros(np.asarray(q).size)
        g[0] = -dx / d - delta * s * dy / d2
        g[1] = -dy / d + delta * s * dx / d2
        g[2] = delta * s
        return g

    return BarrierFunction(dim=3, value=value, gradient=gradient,
                           gradient_bound=float(gradient_bound))


def halfspace_cbf(normal: Sequence[float], offset: float) -> BarrierFunction:
    """Affine wall barrier h(q) = offset - normal . q.

    The safe set is the halfspace normal.q <= offset; e.g. normal=(1, 0),
    offset=p_max keeps the first coordinate below p_max.
    """
    normal = np.asarray(normal, dtype=float)
    offset = float(offset)
    grad = -normal
    bound = float(np.linalg.norm(normal))

    def value(q):
        return offset - float(normal @ np.asarray(q, dtype=float))

    def gradient(q):
        return grad.copy()

    def jacobian(q):
        n = normal.size
        return np.zeros((n, n))

    return BarrierFunction(dim=normal.size, value=value, gradient=gradient,
                           gradient_bound=bound, gradient_jacobian=jacobian)


def closest_obstacle_cbf(obstacles: Sequence[Obstacle], kind: str = "distance",
                         delta: float = 0.0,
                         gradient_bound: Optional[float] = None) -> BarrierFunction:
    """Pointwise minimum of per-obstacle barriers.

    ``kind`` selects the member family ("distance" or "heading"). The value
    is min_i h_i(q); gradient, jacobian and reported active index belong to
    the minimizing obstacle, ties resolved to the lowest index. The
    composite is nonsmooth on switching surfaces; no smoothing is applied
    there, the active member simply changes.
    """
    if len(obstacles) == 0:
        raise ValueError("obstacle list must be non-empty")
    if kind == "distance":
        members = [distance_cbf(o) for o in obstacles]
    elif kind == "heading":
        members = [heading_cbf(o, delta) for o in obstacles]
    else:
        raise ValueError(f"unknown barrier kind {kind!r}")

    if gradient_bound is None:
        gradient_bound = max(m.gradient_bound for m in members)

    def active(q):
        best = 0
        best_h = members[0].value(q)
        for i in range(1, len(members)):
            hi = members[i].value(q)
            if hi < best_h:
                best = i
                best_h = hi
        return best

    def value(q):
        return min(m.value(q) for m in members)

    def gradient(q):
        return members[active(q)].gradient(q)

    jacobian = None
    if all(m.gradient_jacobian is not None for m in members):
        def jacobian(q):
            return members[active(q)].gradient_jacobian(q)

    return BarrierFunction(dim=members[0].dim, value=value, gradient=gradient,
                           gradient_bound=float(gradient_bound),
                           active_index=active, gradient_jacobian=jacobian)


def heading_gradient_bound(obstacles: Sequence[Obstacle], delta: float,
                           xy_bounds: Sequence[Sequence[float]],
                           grid_step: float = 0.01, psi_step: float = 0.01,
                           safety_factor: float = 1.1) -> float:
    """Gradient-norm bound for heading barriers by workspace sampling.

    Sweeps a rectangular (x, y) grid at ``grid_step`` resolution restricted
    to points with d >= r, and a heading grid at ``psi_step``, then scales
    the largest sampled gradient norm by ``safety_factor``.

    For the heading barrier ||grad h||^2 = 1 + (delta*s/d)^2 + (delta*s)^2
    with s = sin(psi - theta), which is monotone in |s| and in 1/d, so the
    heading grid enters only through the largest |sin| it realizes relative
    to theta(x, y); that reduction is exact and keeps the sweep fast.
    """
    key = (tuple((float(o.center[0]), float(o.center[1]), float(o.radius))
                 for o in obstacles),
           float(delta),
           tuple((float(lo), float(hi)) for lo, hi in xy_bounds),
           float(grid_step), float(psi_step), float(safety_factor))
    cached = _GRADIENT_BOUND_CACHE.get(key)
    if cached is not None:
        return cached
    (x_lo, x_hi), (y_lo, y_hi) = xy_bounds
    xs = np.arange(x_lo, x_hi + grid_step * 0.5, grid_step)
    ys = np.arange(y_lo, y_hi + grid_step * 0.5, grid_step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    worst = 0.0
    delta = float(delta)
    for obs in obstacles:
        dx = obs.center[0] - gx
        dy = obs.center[1] - gy
        d = np.hypot(dx, dy)
        mask = d >= obs.radius
        if not mask.any():
            continue
        d = d[mask]
        theta = np.arctan2(dy[mask], dx[mask])
        # nearest psi-grid point to the two maximizers psi = theta +/- pi/2
        gap = np.minimum(np.abs((theta + 0.5 * math.pi) % psi_step),
                         psi_step - np.abs((theta + 0.5 * math.pi) % psi_step))
        gap2 = np.minimum(np.abs((theta - 0.5 * math.pi) % psi_step),
                          psi_step - np.abs((theta - 0.5 * math.pi) % psi_step))
        s_max = np.cos(np.minimum(gap, gap2))
        norm2 = 1.0 + (delta * s_max / d) ** 2 + (delta * s_max) ** 2
        worst = max(worst, float(np.sqrt(norm2.max())))
    if worst == 0.0:
        raise ValueError("no workspace sample satisfied d >= r for any obstacle")
    bound = safety_factor * worst
    _GRADIENT_BOUND_CACHE[key] = bound
    return bound


_GRADIENT_BOUND_CACHE: dict = {}

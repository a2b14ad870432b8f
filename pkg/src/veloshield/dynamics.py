"""Full-order robot models in manipulator-equation form.

    D(q) qddot + C(q, qdot) qdot + G(q) = B u

D is symmetric positive definite. C is stored split as C_cor + C_damp:
the Coriolis/centrifugal part C_cor satisfies the skew-symmetry of
Ddot - 2 C_cor, while actuator damping terms live in C_damp with a
positive-semidefinite symmetric part. The split keeps both structural
properties individually checkable; C(q, qdot) itself is their sum.

The balancing-robot model follows the two-degree-of-freedom wheel/pitch
formulation with motor constant K_m and damping b_t; the printed C matrix
mixes b_t/R and b_t*R placements whose units are only consistent treating
angles as dimensionless, and is implemented exactly as printed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import NumericalSingularityError

__all__ = [
    "MechanicalSystem",
    "SegwayParams",
    "ArmParams",
    "Workspace",
    "double_integrator_system",
    "planar_segway",
    "SpatialSegway",
    "spatial_segway",
    "two_link_arm",
    "accel",
    "clamp_input",
    "inertia_eigen_range",
    "lyapunov_norm_bounds",
]

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class MechanicalSystem:
    """Manipulator-equation data with a Coriolis/damping split.

    ``mass_coords`` lists the configuration coordinates the inertia matrix
    actually depends on; workspace sweeps only grid those.
    """

    n: int
    m: int
    mass_matrix: Callable[[np.ndarray], np.ndarray]
    coriolis: Callable[[np.ndarray, np.ndarray], np.ndarray]
    damping: Callable[[np.ndarray], np.ndarray]
    gravity: Callable[[np.ndarray], np.ndarray]
    input_matrix: np.ndarray
    input_bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None
    mass_matrix_rate: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    potential: Optional[Callable[[np.ndarray], float]] = None
    mass_coords: Tuple[int, ...] = ()
    name: str = ""

    def C(self, q, qdot) -> np.ndarray:
        """Full velocity-coefficient matrix C_cor + C_damp."""
        q = np.asarray(q, dtype=float)
        return self.coriolis(q, np.asarray(qdot, dtype=float)) + self.damping(q)

    def energy(self, q, qdot) -> float:
        """Total mechanical energy (requires a potential)."""
        if self.potential is None:
            raise ValueError(f"system {self.name!r} declares no potential energy")
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        return 0.5 * float(qdot @ self.mass_matrix(q) @ qdot) + self.potential(q)


def clamp_input(system: MechanicalSystem, u) -> np.ndarray:
    """Clamp an input vector to the system's per-channel bounds."""
    u = np.asarray(u, dtype=float)
    if system.input_bounds is None:
        return u.copy()
    lo, hi = system.input_bounds
    return np.clip(u, lo, hi)


def accel(system: MechanicalSystem, q, qdot, u) -> np.ndarray:
    """Configuration acceleration D(q)^-1 (B u - C(q, qdot) qdot - G(q)).

    The input is clamped to the system bounds first. Raises
    :class:`NumericalSingularityError` when D(q) is ill-conditioned.
    """
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    u = clamp_input(system, u)
    D = system.mass_matrix(q)
    if np.linalg.cond(D) > CONDITION_LIMIT:
        raise NumericalSingularityError("inertia matrix condition number exceeds 1e12")
    rhs = system.input_matrix @ u - system.C(q, qdot) @ qdot - system.gravity(q)
    return np.linalg.solve(D, rhs)


def double_integrator_system(n: int) -> MechanicalSystem:
    """qddot = u in n dimensions: D = B = I, C = 0, G = 0, unbounded input."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    eye = np.eye(n)
    zero = np.zeros((n, n))

    return MechanicalSystem(
        n=n, m=n,
        mass_matrix=lambda q: eye,
        coriolis=lambda q, qdot: zero,
        damping=lambda q: zero,
        gravity=lambda q: np.zeros(n),
        input_matrix=eye,
        mass_matrix_rate=lambda q, qdot: zero,
        potential=lambda q: 0.0,
        name="double_integrator",
    )


@dataclass(frozen=True)
class SegwayParams:
    """Physical parameters of the balancing robot (planar model).

    The lumped values m0 and J0 are carried as published alongside their
    components; they agree with m + M + J_C/R^2 and m L^2 + J_G only to the
    rounding of the published table (about 2e-3 and 8e-3 respectively), so
    the consistency check uses a 1e-2 tolerance.
    """

    g: float = 9.81           # m/s^2
    R: float = 0.195          # wheel radius, m
    M: float = 2 * 2.485      # wheel mass, kg
    J_C: float = 2 * 0.0559   # wheel inertia, kg m^2
    L: float = 0.169          # wheel center to frame CoM, m
    m: float = 44.798         # frame mass, kg
    J_G: float = 3.836        # frame inertia, kg m^2
    m0: float = 52.710        # lumped mass, kg
    J0: float = 5.108         # lumped inertia, kg m^2
    K_m: float = 2 * 1.262    # motor torque constant, N m / V
    b_t: float = 2 * 1.225    # motor damping, N s
    u_max: float = 20.0       # input bound, V

    def __post_init__(self):
        if abs(self.m0 - (self.m + self.M + self.J_C / self.R ** 2)) > 1e-2:
            raise ValueError("lumped mass m0 inconsistent with components")
        if abs(self.J0 - (self.m * self.L ** 2 + self.J_G)) > 1e-2:
            raise ValueError("lumped inertia J0 inconsistent with components")


def planar_segway(params: SegwayParams = SegwayParams()) -> MechanicalSystem:
    """Planar balancing robot with q = (p, phi): wheel position and pitch.

    D(q) = [[m0, mL cos phi], [mL cos phi, J0]]
    C    = [[b_t/R, -b_t - mL phidot sin phi], [-b_t, b_t R]]
    G    = (0, -m g L sin phi),  B = (K_m/R, -K_m)', |u| <= u_max volts.
    """
    p = params
    mL = p.m * p.L
    mgL = p.m * p.g * p.L
    damp = np.array([[p.b_t / p.R, -p.b_t], [-p.b_t, p.b_t * p.R]])

    def mass_matrix(q):
        c = math.cos(q[1])
        return np.array([[p.m0, mL * c], [mL * c, p.J0]])

    def coriolis(q, qdot):
        return np.array([[0.0, -mL * qdot[1] * math.sin(q[1])], [0.0, 0.0]])

    def damping_m(q):
        return damp

    def gravity(q):
        return np.array([0.0, -mgL * math.sin(q[1])])

    def mass_matrix_rate(q, qdot):
        off = -mL * qdot[1] * math.sin(q[1])
        return np.array([[0.0, off], [off, 0.0]])

    def potential(q):
        return mgL * math.cos(q[1])

    bound = np.array([p.u_max])
    return MechanicalSystem(
        n=2, m=1,
        mass_matrix=mass_matrix,
        coriolis=coriolis,
        damping=damping_m,
        gravity=gravity,
        input_matrix=np.array([[p.K_m / p.R], [-p.K_m]]),
        input_bounds=(-bound, bound),
        mass_matrix_rate=mass_matrix_rate,
        potential=potential,
        mass_coords=(1,),
        name="planar_segway",
    )


@dataclass(frozen=True)
class SpatialSegway:
    """Composed spatial balancing robot, state (x, y, psi, phi, v, phidot, psidot).

    The planar wheel/pitch dynamics are driven by the mean of the two wheel
    voltages; yaw follows J_psi psiddot = (K_m w / 2R)(u2 - u1) - b_psi psidot;
    position integrates the no-sideslip kinematics xdot = v cos psi,
    ydot = v sin psi. Track width, yaw inertia and yaw damping are model
    choices documented with the scenario, not published constants.

    Wheel 1 is the left wheel: driving it harder turns the vehicle
    clockwise (negative yaw rate), so the differential tracking law with
    +K_psidot(psidot - omega_s) on wheel 1 closes a negative-feedback
    yaw loop. The opposite assignment is unstable with that law.
    """

    planar: MechanicalSystem
    params: SegwayParams
    track_width: float
    yaw_inertia: float
    yaw_damping: float

    n: int = 4   # configuration (x, y, psi, phi)
    m: int = 2   # wheel voltages

    @property
    def input_bounds(self):
        bound = np.array([self.params.u_max, self.params.u_max])
        return (-bound, bound)

    def clamp(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.clip(u, -self.params.u_max, self.params.u_max)

    def deriv(self, state, u) -> np.ndarray:
        """Time derivative of the 7-dimensional state for wheel voltages u."""
        x, y, psi, phi, v, phidot, psidot = (float(s) for s in state)
        u1, u2 = (float(c) for c in self.clamp(u))
        mean = 0.5 * (u1 + u2)
        planar_acc = accel(self.planar, np.array([0.0, phi]),
                           np.array([v, phidot]), np.array([mean]))
        yaw_acc = ((self.params.K_m * self.track_width / (2.0 * self.params.R))
                   * (u2 - u1) - self.yaw_damping * psidot) / self.yaw_inertia
        return np.array([
            v * math.cos(psi),
            v * math.sin(psi),
            psidot,
            phidot,
            planar_acc[0],
            planar_acc[1],
            yaw_acc,
        ])


def spatial_segway(params: SegwayParams = SegwayParams(), track_width: float = 0.5,
                   yaw_inertia: float = 2.0,
                   yaw_damping: Optional[float] = None) -> SpatialSegway:
    """Spatial balancing robot composed from the planar model plus yaw.

    Default yaw damping is b_t * R * w / 2, scaling the motor damping to the
    differential-drive lever arm.
    """
    if not (track_width > 0 and yaw_inertia > 0):
        raise ValueError("track width and yaw inertia must be positive")
    if yaw_damping is None:
        yaw_damping = params.b_t * params.R * track_width / 2.0
    return SpatialSegway(planar=planar_segway(params), params=params,
                         track_width=track_width, yaw_inertia=yaw_inertia,
                         yaw_damping=float(yaw_damping))


@dataclass(frozen=True)
class ArmParams:
    """Two-revolute-joint planar arm (fully actuated, gravity-loaded)."""

    m1: float = 1.5
    m2: float = 1.0
    l1: float = 0.5
    lc1: float = 0.25
    lc2: float = 0.2
    I1: float = 0.03
    I2: float = 0.015
    g: float = 9.81
    b1: float = 0.15     # joint viscous damping, N m s
    b2: float = 0.1
    tau_max: float = 25.0


def two_link_arm(params: ArmParams = ArmParams()) -> MechanicalSystem:
    """Two-link revolute arm: the standard fully-actuated test system.

    Nonconstant inertia, quadratic-velocity Coriolis terms satisfying the
    skew-symmetry property, configuration-dependent gravity, B = I, and
    torque bounds, which is everything the tracking-controller family needs
    exercised on a system richer than the double integrator.
    """
    p = params
    a1 = p.I1 + p.I2 + p.m1 * p.lc1 ** 2 + p.m2 * (p.l1 ** 2 + p.lc2 ** 2)
    a2 = p.m2 * p.l1 * p.lc2
    a3 = p.I2 + p.m2 * p.lc2 ** 2
    g1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.g
    g2 = p.m2 * p.lc2 * p.g
    damp = np.array([[p.b1, 0.0], [0.0, p.b2]])

    def mass_matrix(q):
        c2 = math.cos(q[1])
        return np.array([[a1 + 2.0 * a2 * c2, a3 + a2 * c2],
                         [a3 + a2 * c2, a3]])

    def coriolis(q, qdot):
        s2 = math.sin(q[1])
        return a2 * s2 * np.array([[-qdot[1], -(qdot[0] + qdot[1])],
                                   [qdot[0], 0.0]])

    def damping_m(q):
        return damp

    def gravity(q):
        c1 = math.cos(q[0])
        c12 = math.cos(q[0] + q[1])
        return np.array([g1 * c1 + g2 * c12, g2 * c12])

    def mass_matrix_rate(q, qdot):
        s2 = math.sin(q[1])
        d = -a2 * s2 * qdot[1]
        return np.array([[2.0 * d, d], [d, 0.0]])

    def potential(q):
        return g1 * math.sin(q[0]) + g2 * math.sin(q[0] + q[1])

    bound = np.array([p.tau_max, p.tau_max])
    return MechanicalSystem(
        n=2, m=2,
        mass_matrix=mass_matrix,
        coriolis=coriolis,
        damping=damping_m,
        gravity=gravity,
        input_matrix=np.eye(2),
        input_bounds=(-bound, bound),
        mass_matrix_rate=mass_matrix_rate,
        potential=potential,
        mass_coords=(1,),
        name="two_link_arm",
    )


@dataclass(frozen=True)
class Workspace:
    """Bounded configuration-space box over which suprema are swept."""

    bounds: Tuple[Tuple[float, float], ...]
    resolution: float = 1e-2
    safety_factor: float = 1.1

    def grid(self, coord: int, resolution: Optional[float] = None) -> np.ndarray:
        lo, hi = self.bounds[coord]
        res = self.resolution if resolution is None else resolution
        count = max(2, int(round((hi - lo) / res)) + 1)
        return np.linspace(lo, hi, count)


def inertia_eigen_range(system: MechanicalSystem, workspace: Workspace,
                        resolution: Optional[float] = None) -> Tuple[float, float]:
    """(inf of smallest, sup of largest) eigenvalue of D(q) over the workspace.

    Only the coordinates in ``system.mass_coords`` are swept; the inertia
    matrix is constant in the others.
    """
    if not system.mass_coords:
        w = np.linalg.eigvalsh(system.mass_matrix(np.zeros(system.n)))
        return float(w[0]), float(w[-1])
    axes = [workspace.grid(c, resolution) for c in system.mass_coords]
    lo = math.inf
    hi = -math.inf
    q = np.zeros(system.n)
    for values in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes)):
        for c, v in zip(system.mass_coords, values):
            q[c] = v
        w = np.linalg.eigvalsh(system.mass_matrix(q))
        lo = min(lo, float(w[0]))
        hi = max(hi, float(w[-1]))
    return lo, hi


def lyapunov_norm_bounds(system: MechanicalSystem, workspace: Workspace,
                         resolution: Optional[float] = None) -> Tuple[float, float]:
    """(k1, k2) with k1 ||e|| <= sqrt(e' D(q) e / 2) <= k2 ||e|| on the workspace."""
    lo, hi = inertia_eigen_range(system, workspace, resolution)
    return math.sqrt(lo / 2.0), math.sqrt(hi / 2.0)

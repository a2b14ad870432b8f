"""Deterministic closed-loop simulation harness.

``simulate`` integrates the full-order dynamics of a scenario under the
safe-velocity filter and its tracking controller with classical
fixed-step fourth-order integration, evaluating the whole control
pipeline at every integration stage (continuous-control idealization),
and returns a :class:`TrajectoryLog` with everything the certificate
checks consume. Runs are pure functions of the scenario: reruns are
bit-identical.

The inner loops live in :mod:`veloshield._kernels`; this module builds
kernel arguments from a scenario, assembles the log, and attaches the
tracking certificate (gain-derived where the controller admits one,
fitted from the error envelope for the balancing-robot laws).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .barriers import (BarrierFunction, Obstacle, closest_obstacle_cbf,
                       halfspace_cbf, heading_gradient_bound)
from .certificates import TrackingCertificate, certificate, lambda_from_gains
from .dynamics import (MechanicalSystem, SegwayParams, ArmParams, SpatialSegway,
                       Workspace, double_integrator_system, lyapunov_norm_bounds,
                       planar_segway, spatial_segway, two_link_arm)
from .errors import (DivergenceError, InfeasibleFilterError, ScenarioError,
                     SingularGradientError)
from .filters import ConstantLaw, ProportionalLaw, UnicycleGoalLaw
from .reduced import ReducedOrderModel, single_axis, single_integrator, unicycle
from .scenario import Scenario
from .tracking import fit_decay_envelope

__all__ = [
    "TrajectoryLog",
    "SafetyMetrics",
    "simulate",
    "safety_metrics",
    "system_object",
    "barrier_object",
    "reduced_object",
    "desired_law_object",
    "build_certificate",
    "CSV_COLUMNS",
]

_IDENTITY_K1 = math.sqrt(0.5)


@dataclass
class TrajectoryLog:
    """Time-indexed record of one closed-loop run.

    ``qs`` is the safe velocity mapped to configuration space (A(q) mu_s);
    ``u_raw``/``u`` are the controller output before and after input
    clamping; ``hV`` is -V + alpha_e h with the certificate's alpha_e
    (alpha_e = 1 and V = 0 for perfect-tracking kinematic scenarios).
    """

    scenario: Scenario
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    qs: np.ndarray
    u_raw: np.ndarray
    u: np.ndarray
    e: np.ndarray
    h: np.ndarray
    V: np.ndarray
    hV: np.ndarray
    active: np.ndarray
    certificate: Optional[TrackingCertificate]

    @property
    def step(self) -> float:
        return self.scenario.step

    def __len__(self) -> int:
        return self.t.size


def _obstacle_array(scn: Scenario) -> np.ndarray:
    if scn.cbf is None or scn.cbf.kind == "halfspace":
        return np.zeros((0, 3))
    return np.array([[o[0], o[1], o[2]] for o in scn.cbf.obstacles], dtype=float)


def system_object(scn: Scenario):
    """Full-order model object for a scenario (None for kinematic)."""
    params = scn.system_params
    if scn.system == "double_integrator":
        return double_integrator_system(scn.q0.size)
    if scn.system == "segway_planar":
        return planar_segway(SegwayParams(**params))
    if scn.system == "segway_spatial":
        seg_keys = {k: v for k, v in params.items()
                    if k not in ("track_width", "yaw_inertia", "yaw_damping")}
        return spatial_segway(SegwayParams(**seg_keys),
                              track_width=params.get("track_width", 0.5),
                              yaw_inertia=params.get("yaw_inertia", 2.0),
                              yaw_damping=params.get("yaw_damping"))
    if scn.system == "two_link_arm":
        return two_link_arm(ArmParams(**params))
    if scn.system == "kinematic":
        return None
    raise ScenarioError(f"unknown system kind {scn.system!r}")


def barrier_object(scn: Scenario) -> Optional[BarrierFunction]:
    """Barrier function the scenario filters against (None when absent)."""
    if scn.cbf is None:
        return None
    spec = scn.cbf
    if spec.kind == "halfspace":
        n = scn.q0.size
        normal = np.zeros(n)
        normal[spec.axis] = 1.0
        return halfspace_cbf(normal, spec.limit)
    obstacles = [Obstacle(np.array([o[0], o[1]]), o[2]) for o in spec.obstacles]
    if spec.kind == "distance":
        return closest_obstacle_cbf(obstacles, "distance")
    if spec.kind == "heading":
        bound = None
        if scn.workspace is not None:
            bound = heading_gradient_bound(
                obstacles, spec.delta, scn.workspace.bounds[:2],
                grid_step=0.01, psi_step=0.01,
                safety_factor=scn.workspace.safety_factor)
        return closest_obstacle_cbf(obstacles, "heading", delta=spec.delta,
                                    gradient_bound=bound)
    raise ScenarioError(f"unknown barrier kind {spec.kind!r}")


def reduced_object(scn: Scenario) -> ReducedOrderModel:
    if scn.reduced_model == "single_integrator":
        return single_integrator(scn.q0.size)
    if scn.reduced_model == "unicycle":
        return unicycle()
    if scn.reduced_model == "single_axis":
        return single_axis(scn.q0.size, 0)
    raise ScenarioError(f"unknown reduced model {scn.reduced_model!r}")


def desired_law_object(scn: Scenario):
    d = scn.desired
    if d.kind == "proportional":
        return ProportionalLaw(kp=d.kp, goal=d.goal, saturation=d.saturation)
    if d.kind == "unicycle_goal":
        return UnicycleGoalLaw(kv=d.kv, komega=d.komega, goal=d.goal,
                               saturation=d.saturation)
    if d.kind == "constant":
        return ConstantLaw(value=d.value)
    raise ScenarioError(f"unknown desired-velocity kind {d.kind!r}")


def _workspace(scn: Scenario) -> Workspace:
    if scn.workspace is not None:
        return Workspace(bounds=scn.workspace.bounds,
                         resolution=scn.workspace.resolution,
                         safety_factor=scn.workspace.safety_factor)
    # default box around the initial configuration; inertia sweeps only
    # read the coordinates the mass matrix depends on
    bounds = tuple((float(c) - 3.2, float(c) + 3.2) for c in scn.q0)
    return Workspace(bounds=bounds, resolution=1e-3)


def _gain_matrix(scn: Scenario, n: int) -> np.ndarray:
    ctrl = scn.controller
    value = ctrl.kd if ctrl.kind == "d" else ctrl.k
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return float(value) * np.eye(n)
    return value


_EIGEN_CACHE: dict = {}


def _eigen_range_cached(scn: Scenario, system: MechanicalSystem,
                        ws: Workspace) -> Tuple[float, float]:
    """Inertia eigenvalue sweep, memoized per (system, swept bounds)."""
    key = (scn.system, tuple(sorted(scn.system_params.items())),
           tuple(ws.bounds[c] for c in system.mass_coords), ws.resolution)
    cached = _EIGEN_CACHE.get(key)
    if cached is None:
        from .dynamics import inertia_eigen_range

        cached = inertia_eigen_range(system, ws, resolution=ws.resolution)
        _EIGEN_CACHE[key] = cached
    return cached


def build_certificate(scn: Scenario, log: Optional["TrajectoryLog"] = None
                      ) -> Optional[TrackingCertificate]:
    """Tracking certificate for a scenario.

    Gain-derived lam for the damping/computed-torque family; envelope-fit
    lam (from the supplied log) for the balancing-robot laws; None for
    kinematic scenarios and scenarios without a barrier.
    """
    cbf = barrier_object(scn)
    if cbf is None or scn.controller.kind == "none":
        return None
    ws = _workspace(scn)
    system = system_object(scn)
    if scn.controller.kind in ("d", "d_gravity", "computed_torque"):
        K = _gain_matrix(scn, system.n)
        if scn.controller.kind == "d":
            K = system.input_matrix @ K
        sym = 0.5 * (K + K.T)
        sigma_min_K = float(np.linalg.eigvalsh(sym)[0])
        lo, hi = _eigen_range_cached(scn, system, ws)
        if sigma_min_K <= 0.0:
            lam = lambda_from_gains(K, system, ws)  # raises InvalidGainsError
        lam = sigma_min_K / hi
        k1, k2 = math.sqrt(lo / 2.0), math.sqrt(hi / 2.0)
        return certificate(scn.alpha, lam, k1, cbf.gradient_bound, k2=k2)
    # scenario-specific balancing laws: empirical decay rate
    if log is None:
        return None
    e_norms = np.sqrt((log.e * log.e).sum(axis=1))
    _, lam = fit_decay_envelope(log.t, e_norms)
    if lam <= 0.0:
        lam = np.nextafter(0.0, 1.0)
    if scn.system == "segway_planar":
        lo, hi = _eigen_range_cached(scn, system_object(scn), ws)
        k1, k2 = math.sqrt(lo / 2.0), math.sqrt(hi / 2.0)
    else:
        k1 = k2 = _IDENTITY_K1
    try:
        return certificate(scn.alpha, lam, k1, cbf.gradient_bound, k2=k2)
    except ValueError:
        return None


def _alloc(nsteps: int, n: int, m: int):
    N = nsteps + 1
    return {
        "t": np.empty(N),
        "q": np.empty((N, n)),
        "qdot": np.empty((N, n)),
        "qs": np.empty((N, n)),
        "u_raw": np.empty((N, m)),
        "u": np.empty((N, m)),
        "e": np.empty((N, n)),
        "h": np.empty(N),
        "V": np.empty(N),
        "active": np.empty(N, dtype=np.int64),
    }


def _raise_status(status: int, step: int, dt: float):
    if status == _kernels.purepy.OK:
        return
    if status == _kernels.purepy.SINGULAR:
        raise SingularGradientError(f"barrier gradient singular at step {step}")
    if status == _kernels.purepy.INFEASIBLE:
        raise InfeasibleFilterError(f"filter constraint infeasible at step {step}")
    raise DivergenceError(step, step * dt)


def _dist_args(scn: Scenario, channels: int):
    if scn.disturbance is None:
        return 0, [0.0] * channels, 0.0, 0.0
    d = scn.disturbance
    amp = list(np.broadcast_to(d.amplitude, (channels,)).astype(float))
    return 1, amp, d.frequency, d.phase


def simulate(scenario: Scenario, backend: Optional[str] = None) -> TrajectoryLog:
    """Run a scenario and return its trajectory log.

    ``backend`` selects the kernel implementation ("native"/"python",
    default auto). Raises :class:`DivergenceError` if the state becomes
    non-finite, naming the failing step.
    """
    scn = scenario
    kern = _kernels.get_backend(backend)
    nsteps = scn.nsteps()
    dt = scn.step
    obs = _obstacle_array(scn)

    if scn.system == "double_integrator":
        out = _alloc(nsteps, 2, 2)
        d = scn.desired
        if d.kind == "proportional":
            law = (0, d.kp, d.goal[0], d.goal[1],
                   -1.0 if d.saturation is None else d.saturation, 0.0, 0.0)
        else:
            law = (1, 0.0, 0.0, 0.0, -1.0, d.value[0], d.value[1])
        K = _gain_matrix(scn, 2)
        ctrl_kind = 0 if scn.controller.kind == "d" else 1
        ff_mode = 0 if scn.controller.feedforward == "analytic" else 1
        dist_on, amp, freq, phase = _dist_args(scn, 2)
        status, step = kern.run_double_integrator(
            np.concatenate([scn.q0, scn.qdot0]), nsteps, dt, obs,
            law[0], law[1], law[2], law[3], law[4], law[5], law[6],
            scn.alpha, ctrl_kind,
            K[0, 0], K[0, 1], K[1, 0], K[1, 1], ff_mode,
            dist_on, amp[0], amp[1], freq, phase,
            out["t"], out["q"], out["qdot"], out["qs"], out["u"],
            out["h"], out["V"], out["e"], out["active"])
        _raise_status(status, step, dt)
        out["u_raw"] = out["u"].copy()

    elif scn.system == "kinematic" and scn.reduced_model == "single_integrator":
        out = _alloc(nsteps, 2, 2)
        d = scn.desired
        status, step = kern.run_kinematic_si(
            scn.q0, nsteps, dt, obs, d.kp, d.goal[0], d.goal[1],
            -1.0 if d.saturation is None else d.saturation, scn.alpha,
            out["t"], out["q"], out["qdot"], out["qs"], out["u"],
            out["h"], out["V"], out["e"], out["active"])
        _raise_status(status, step, dt)
        out["u_raw"] = out["u"].copy()

    elif scn.system == "kinematic" and scn.reduced_model == "unicycle":
        out = _alloc(nsteps, 3, 2)
        d = scn.desired
        status, step = kern.run_kinematic_unicycle(
            scn.q0, nsteps, dt, obs, scn.cbf.delta, d.kv, d.komega,
            d.goal[0], d.goal[1],
            -1.0 if d.saturation is None else d.saturation,
            scn.alpha, scn.weight_r,
            out["t"], out["q"], out["qdot"], out["qs"], out["u"],
            out["h"], out["V"], out["e"], out["active"])
        _raise_status(status, step, dt)
        out["u_raw"] = out["u"].copy()

    elif scn.system == "segway_planar":
        out = _alloc(nsteps, 2, 1)
        p = SegwayParams(**scn.system_params)
        g = scn.controller.segway
        dist_on, amp, freq, phase = _dist_args(scn, 1)
        status, step = kern.run_segway_planar(
            np.concatenate([scn.q0, scn.qdot0]), nsteps, dt,
            p.m0, p.m * p.L, p.J0, p.b_t, p.R, p.K_m, p.m * p.g * p.L, p.u_max,
            scn.cbf.limit, scn.desired.value[0], scn.alpha,
            g.k_pdot, g.k_phi, g.k_phidot,
            dist_on, amp[0], freq, phase,
            out["t"], out["q"], out["qdot"], out["qs"], out["u_raw"], out["u"],
            out["h"], out["V"], out["e"], out["active"])
        _raise_status(status, step, dt)

    elif scn.system == "segway_spatial":
        out = _alloc(nsteps, 4, 2)
        sys_obj = system_object(scn)
        p = sys_obj.params
        g = scn.controller.segway
        d = scn.desired
        dist_on, amp, freq, phase = _dist_args(scn, 2)
        status, step = kern.run_segway_spatial(
            np.concatenate([scn.q0, scn.qdot0]), nsteps, dt,
            p.m0, p.m * p.L, p.J0, p.b_t, p.R, p.K_m, p.m * p.g * p.L, p.u_max,
            sys_obj.track_width, sys_obj.yaw_inertia, sys_obj.yaw_damping,
            obs, scn.cbf.delta, d.kv, d.komega, d.goal[0], d.goal[1],
            -1.0 if d.saturation is None else d.saturation,
            scn.alpha, scn.weight_r,
            g.k_pdot, g.k_phi, g.k_phidot, g.k_psidot,
            dist_on, amp[0], amp[1], freq, phase,
            out["t"], out["q"], out["qdot"], out["qs"], out["u_raw"], out["u"],
            out["h"], out["V"], out["e"], out["active"])
        _raise_status(status, step, dt)

    elif scn.system == "two_link_arm":
        out = _alloc(nsteps, 2, 2)
        prm = ArmParams(**scn.system_params)
        a1 = prm.I1 + prm.I2 + prm.m1 * prm.lc1 ** 2 + prm.m2 * (prm.l1 ** 2 + prm.lc2 ** 2)
        a2 = prm.m2 * prm.l1 * prm.lc2
        a3 = prm.I2 + prm.m2 * prm.lc2 ** 2
        g1 = (prm.m1 * prm.lc1 + prm.m2 * prm.l1) * prm.g
        g2 = prm.m2 * prm.lc2 * prm.g
        kinds = {"d": 0, "d_gravity": 1, "computed_torque": 2}
        K = _gain_matrix(scn, 2)
        mu = scn.desired.value
        dist_on, amp, freq, phase = _dist_args(scn, 2)
        status, step = kern.run_arm(
            np.concatenate([scn.q0, scn.qdot0]), nsteps, dt,
            a1, a2, a3, g1, g2, prm.b1, prm.b2, prm.tau_max,
            mu[0], mu[1], kinds[scn.controller.kind],
            K[0, 0], K[0, 1], K[1, 0], K[1, 1],
            dist_on, amp[0], amp[1], freq, phase,
            out["t"], out["q"], out["qdot"], out["qs"], out["u_raw"], out["u"],
            out["h"], out["V"], out["e"], out["active"])
        _raise_status(status, step, dt)

    else:
        raise ScenarioError(
            f"unsupported system/reduced-model combination: {scn.system}/{scn.reduced_model}")

    log = TrajectoryLog(scenario=scn, certificate=None, hV=np.empty(0), **out)
    log.certificate = build_certificate(scn, log)
    if scn.system == "kinematic":
        log.hV = log.h.copy()   # V = 0 identically; alpha_e conventionally 1
    elif log.certificate is not None:
        log.hV = -log.V + log.certificate.alpha_e * log.h
    else:
        log.hV = np.full(log.t.size, np.nan)
    return log


@dataclass
class SafetyMetrics:
    """Post-run summary of one trajectory log."""

    min_h: float
    t_min_h: float
    min_hV: float
    t_min_hV: float
    final_goal_distance: Optional[float]
    clamp_fraction: float
    envelope_M: float
    envelope_lambda: float
    final_q: np.ndarray
    final_qdot: np.ndarray
    samples: int

    def to_dict(self) -> dict:
        return {
            "min_h": self.min_h,
            "t_min_h": self.t_min_h,
            "min_hV": self.min_hV,
            "t_min_hV": self.t_min_hV,
            "final_goal_distance": self.final_goal_distance,
            "clamp_fraction": self.clamp_fraction,
            "envelope_M": self.envelope_M,
            "envelope_lambda": self.envelope_lambda,
            "final_q": [float(v) for v in self.final_q],
            "final_qdot": [float(v) for v in self.final_qdot],
            "samples": self.samples,
        }


def _nan_min(t: np.ndarray, series: np.ndarray) -> Tuple[float, float]:
    if np.isnan(series).all():
        return math.nan, math.nan
    i = int(np.nanargmin(series))
    return float(series[i]), float(t[i])


def safety_metrics(log: TrajectoryLog) -> SafetyMetrics:
    """Summary statistics of a run: barrier minima, goal distance at the
    final sample, clamp-saturation fraction and the fitted error envelope."""
    if len(log) == 0:
        raise ValueError("empty trajectory log")
    min_h, t_min_h = _nan_min(log.t, log.h)
    min_hV, t_min_hV = _nan_min(log.t, log.hV)
    goal = log.scenario.desired.goal
    if goal is None:
        goal_distance = None
    else:
        k = goal.size
        goal_distance = float(np.linalg.norm(log.q[-1, :k] - goal))
    clamped = (log.u_raw != log.u).any(axis=1)
    e_norms = np.sqrt((log.e * log.e).sum(axis=1))
    M, lam = fit_decay_envelope(log.t, e_norms)
    return SafetyMetrics(
        min_h=min_h, t_min_h=t_min_h, min_hV=min_hV, t_min_hV=t_min_hV,
        final_goal_distance=goal_distance,
        clamp_fraction=float(clamped.mean()),
        envelope_M=M, envelope_lambda=lam,
        final_q=log.q[-1].copy(), final_qdot=log.qdot[-1].copy(),
        samples=len(log),
    )


def initial_membership(log: TrajectoryLog):
    """Set-membership report at the first sample (None without a barrier).

    Kinematic scenarios track perfectly (V = 0), so membership reduces to
    the plain barrier sign there.
    """
    from .certificates import SetMembershipReport, membership

    scn = log.scenario
    cbf = barrier_object(scn)
    if cbf is None:
        return None
    d_inf = scn.disturbance.d_inf if scn.disturbance is not None else 0.0
    if log.certificate is not None:
        return membership(log.certificate, cbf, system_object(scn),
                          log.q[0], log.e[0], d_inf)
    h0 = float(log.h[0])
    return SetMembershipReport(h=h0, V=0.0, h_V=h0, h_d=h0, h_Vd=h0,
                               in_S=h0 >= 0.0, in_S_V=h0 >= 0.0,
                               in_S_d=h0 >= 0.0, in_S_Vd=h0 >= 0.0)


CSV_COLUMNS = "t,q...,qdot...,qs...,u...,h,V,hV,active_obstacle"


def write_csv(log: TrajectoryLog, fh) -> None:
    """Write the trajectory in the documented column layout.

    Vector blocks are expanded per coordinate (q0, q1, ...); floats use
    shortest round-trip formatting so identical runs serialize to
    identical bytes.
    """
    n = log.q.shape[1]
    m = log.u.shape[1]
    header = (["t"]
              + [f"q{i}" for i in range(n)]
              + [f"qdot{i}" for i in range(n)]
              + [f"qs{i}" for i in range(n)]
              + [f"u{i}" for i in range(m)]
              + ["h", "V", "hV", "active_obstacle"])
    fh.write(",".join(header) + "\n")
    for k in range(len(log)):
        row = [repr(float(log.t[k]))]
        row += [repr(float(v)) for v in log.q[k]]
        row += [repr(float(v)) for v in log.qdot[k]]
        row += [repr(float(v)) for v in log.qs[k]]
        row += [repr(float(v)) for v in log.u[k]]
        row += [repr(float(log.h[k])), repr(float(log.V[k])), repr(float(log.hV[k])),
                str(int(log.active[k]))]
        fh.write(",".join(row) + "\n")

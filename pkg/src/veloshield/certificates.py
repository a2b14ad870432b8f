"""Safety certificates linking tracking speed to barrier decay.

A velocity-tracking loop with Lyapunov bounds k1 ||e|| <= V <= k2 ||e||
and decay rate lam, combined with a barrier whose gradient norm is at most
C_h and whose safe velocity satisfies grad h . qdot_s >= -alpha h, keeps
the configuration safe whenever lam > alpha and the initial state lies in
the extended safe set

    S_V = {(q, e) : h_V(q, e) = -V(q, e) + alpha_e h(q) >= 0},

with coupling constant alpha_e = (lam - alpha) k1 / C_h. Under a bounded
input disturbance with linear gain iota(s) = s / (2 k1), the guarantee
degrades gracefully: trajectories starting in the inflated set S_Vd stay
in S_d, i.e. h >= -gamma with gamma = iota(||d||_inf) / alpha.

This module evaluates those constants, the set memberships, the pointwise
decrease/increase conditions along logged trajectories, and the scalar
comparison bound used for non-differentiable tracking-error envelopes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .barriers import BarrierFunction
from .dynamics import MechanicalSystem, Workspace, inertia_eigen_range
from .errors import InvalidGainsError
from .tracking import lyapunov_value

__all__ = [
    "TrackingCertificate",
    "SetMembershipReport",
    "ConditionReport",
    "lambda_from_gains",
    "certificate",
    "membership",
    "condition_check",
    "comparison_bound",
    "comparison_bound_exact",
]


@dataclass(frozen=True)
class TrackingCertificate:
    """Constants of the tracking-safety coupling.

    ``alpha_e`` is positive exactly when ``lam > alpha``; only then does the
    forward-invariance guarantee apply (``theorem_applicable``). ``k1`` and
    ``k2`` carry the units of the Lyapunov weight and are reported raw; the
    scenario documentation states the coordinate units.
    """

    alpha: float
    lam: float
    k1: float
    C_h: float
    iota_slope: float
    alpha_e: float
    k2: Optional[float] = None

    @property
    def theorem_applicable(self) -> bool:
        return self.lam > self.alpha

    def iota(self, d_inf: float) -> float:
        """Linear disturbance gain iota(s) = iota_slope * s."""
        return self.iota_slope * float(d_inf)

    def gamma(self, d_inf: float) -> float:
        """Safe-set inflation gamma = iota(||d||_inf) / alpha."""
        return self.iota(d_inf) / self.alpha

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "lambda": self.lam,
            "k1": self.k1,
            "C_h": self.C_h,
            "iota_slope": self.iota_slope,
            "alpha_e": self.alpha_e,
            "theorem_applicable": self.theorem_applicable,
        }
        if self.k2 is not None:
            out["k2"] = self.k2
        return out


def certificate(alpha: float, lam: float, k1: float, C_h: float,
                iota_slope: Optional[float] = None,
                k2: Optional[float] = None) -> TrackingCertificate:
    """Populate the derived certificate constants.

    alpha_e = (lam - alpha) k1 / C_h; iota defaults to the linear gain with
    slope 1 / (2 k1).
    """
    if not (alpha > 0 and lam > 0 and k1 > 0 and C_h > 0):
        raise ValueError("certificate constants must be positive")
    if iota_slope is None:
        iota_slope = 1.0 / (2.0 * k1)
    alpha_e = (lam - alpha) * k1 / C_h
    return TrackingCertificate(alpha=alpha, lam=lam, k1=k1, C_h=C_h,
                               iota_slope=float(iota_slope), alpha_e=alpha_e, k2=k2)


def lambda_from_gains(K: np.ndarray, system: MechanicalSystem, workspace: Workspace,
                      resolution: Optional[float] = None) -> float:
    """Tracking rate: smallest gain eigenvalue over largest swept inertia eigenvalue."""
    K = np.asarray(K, dtype=float)
    sym = 0.5 * (K + K.T)
    sigma_min = float(np.linalg.eigvalsh(sym)[0])
    if sigma_min <= 0.0:
        raise InvalidGainsError("gain matrix must be positive definite")
    _, sigma_max_D = inertia_eigen_range(system, workspace, resolution)
    return sigma_min / sigma_max_D


@dataclass(frozen=True)
class SetMembershipReport:
    """Scalar certificate values and set memberships at one state."""

    h: float
    V: float
    h_V: float
    h_d: float
    h_Vd: float
    in_S: bool
    in_S_V: bool
    in_S_d: bool
    in_S_Vd: bool

    def to_dict(self) -> dict:
        return {
            "h": self.h, "V": self.V, "h_V": self.h_V,
            "h_d": self.h_d, "h_Vd": self.h_Vd,
            "in_S": self.in_S, "in_S_V": self.in_S_V,
            "in_S_d": self.in_S_d, "in_S_Vd": self.in_S_Vd,
        }


def membership(cert: TrackingCertificate, cbf: BarrierFunction,
               system: Optional[MechanicalSystem], q, e,
               d_inf: float = 0.0) -> SetMembershipReport:
    """Evaluate h, V, h_V and the four set memberships at a state.

    Memberships use exact >= 0 comparisons; numerical slack belongs to
    trajectory-level assertions, not to the set definitions.
    """
    q = np.asarray(q, dtype=float)
    h = float(cbf.value(q))
    V = lyapunov_value(system, q, e)
    h_V = -V + cert.alpha_e * h
    gamma = cert.gamma(d_inf)
    h_d = h + gamma
    h_Vd = h_V + gamma
    return SetMembershipReport(
        h=h, V=V, h_V=h_V, h_d=h_d, h_Vd=h_Vd,
        in_S=h >= 0.0, in_S_V=h_V >= 0.0,
        in_S_d=h_d >= 0.0, in_S_Vd=h_Vd >= 0.0,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Per-sample margins of a decrease/increase condition along a log.

    Margins are defined so that the condition holds when margin >= 0;
    ``violations`` lists interior sample indices whose margin falls below
    -tolerance. Endpoint samples have no centered derivative and carry no
    margin.
    """

    kind: str
    times: np.ndarray
    margins: np.ndarray
    violations: List[int]
    tolerance: float

    @property
    def satisfied(self) -> bool:
        return not self.violations


_KINDS = ("clf", "cbf", "iss", "issf")


def condition_check(kind: str, t: np.ndarray, series: np.ndarray, *,
                    lam: Optional[float] = None, alpha: Optional[float] = None,
                    iota_value: float = 0.0, tolerance: float = 1e-6) -> ConditionReport:
    """Check a pointwise certificate condition along a trajectory.

    ``series`` is V for kinds "clf"/"iss" and h for kinds "cbf"/"issf"; the
    derivative is estimated by central differences, so at least 3 samples
    are required. Margins:

        clf:   -lam V - Vdot            iss:   -lam V + iota - Vdot
        cbf:    hdot + alpha h          issf:   hdot + alpha h + iota
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    t = np.asarray(t, dtype=float)
    series = np.asarray(series, dtype=float)
    if series.size < 3:
        raise ValueError("need at least 3 samples for central differences")
    rate = (series[2:] - series[:-2]) / (t[2:] - t[:-2])
    mid = series[1:-1]
    if kind == "clf":
        margins = -lam * mid - rate
    elif kind == "iss":
        margins = -lam * mid + iota_value - rate
    elif kind == "cbf":
        margins = rate + alpha * mid
    else:
        margins = rate + alpha * mid + iota_value
    violations = [int(i) + 1 for i in np.nonzero(margins < -tolerance)[0]]
    return ConditionReport(kind=kind, times=t[1:-1], margins=margins,
                           violations=violations, tolerance=tolerance)


def comparison_bound(t: np.ndarray, h0: float, alpha: float, drain: float,
                     lam: float) -> np.ndarray:
    """Integrate ydot = -alpha y - drain * exp(-lam t), y(0) = h0, on a grid.

    Classical fourth-order steps on each interval; the logged barrier of a
    run whose tracking error respects the (M, lam) envelope with
    drain = C_h M ||e(0)|| stays above this curve.
    """
    t = np.asarray(t, dtype=float)
    y = np.empty(t.size)
    y[0] = h0
    for i in range(t.size - 1):
        dt = t[i + 1] - t[i]
        ti = t[i]
        yi = y[i]
        k1 = -alpha * yi - drain * math.exp(-lam * ti)
        k2 = -alpha * (yi + 0.5 * dt * k1) - drain * math.exp(-lam * (ti + 0.5 * dt))
        k3 = -alpha * (yi + 0.5 * dt * k2) - drain * math.exp(-lam * (ti + 0.5 * dt))
        k4 = -alpha * (yi + dt * k3) - drain * math.exp(-lam * (ti + dt))
        y[i + 1] = yi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def comparison_bound_exact(t: np.ndarray, h0: float, alpha: float, drain: float,
                           lam: float) -> np.ndarray:
    """Closed-form solution of the comparison equation (cross-check)."""
    t = np.asarray(t, dtype=float)
    if abs(lam - alpha) < 1e-12:
        return np.exp(-alpha * t) * (h0 - drain * t)
    return (np.exp(-alpha * t) * h0
            - drain * (np.exp(-lam * t) - np.exp(-alpha * t)) / (alpha - lam))

"""Shared test utilities: finite-difference oracles and scenario builders."""
import numpy as np

from veloshield.scenario import scenario_from_dict

SCHEMA = "veloshield/scenario/v1"


def fd_gradient(f, q, step=1e-6):
    """Central finite-difference gradient of a scalar function."""
    q = np.asarray(q, dtype=float)
    g = np.zeros(q.size)
    for i in range(q.size):
        qp = q.copy()
        qm = q.copy()
        qp[i] += step
        qm[i] -= step
        g[i] = (f(qp) - f(qm)) / (2.0 * step)
    return g


def fd_jacobian(f, q, step=1e-6):
    """Central finite-difference Jacobian of a vector function."""
    q = np.asarray(q, dtype=float)
    cols = []
    for i in range(q.size):
        qp = q.copy()
        qm = q.copy()
        qp[i] += step
        qm[i] -= step
        cols.append((np.asarray(f(qp)) - np.asarray(f(qm))) / (2.0 * step))
    return np.stack(cols, axis=1)


def central_rate(t, series):
    """Central-difference time derivative at interior samples."""
    t = np.asarray(t, dtype=float)
    series = np.asarray(series, dtype=float)
    return (series[2:] - series[:-2]) / (t[2:] - t[:-2])


def di_doc(*, obstacles=(), kp=0.3, goal=(3.0, 0.0), saturation=None,
           constant=None, alpha=0.2, controller="d", gain=1.0,
           feedforward="analytic", q0=(0.0, 0.0), v0=(0.0, 0.0),
           duration=6.0, step=1e-3, disturbance=None, name="di"):
    """Scenario document for the planar double integrator."""
    if constant is not None:
        desired = {"kind": "constant", "value": list(constant)}
    else:
        desired = {"kind": "proportional", "kp": kp, "goal": list(goal),
                   "saturation": saturation}
    if controller == "d":
        ctrl = {"kind": "d", "kd": gain}
    else:
        ctrl = {"kind": "computed_torque", "k": gain, "feedforward": feedforward}
    doc = {
        "schema": SCHEMA, "name": name,
        "system": {"kind": "double_integrator"},
        "cbf": ({"kind": "distance",
                 "obstacles": [{"center": [o[0], o[1]], "radius": o[2]}
                               for o in obstacles]}
                if obstacles else None),
        "reduced_model": "single_integrator",
        "desired": desired,
        "filter": {"alpha": alpha},
        "controller": ctrl,
        "initial": {"q": list(q0), "qdot": list(v0)},
        "duration": duration, "step": step,
    }
    if disturbance is not None:
        doc["disturbance"] = disturbance
    return doc


def di_scenario(**kwargs):
    return scenario_from_dict(di_doc(**kwargs))


def arm_doc(*, controller="d", gain=5.0, mu=(0.3, -0.2), q0=(0.3, 0.6),
            v0=(0.5, -0.5), tau_max=25.0, duration=6.0, step=1e-3,
            disturbance=None, name="arm"):
    doc = {
        "schema": SCHEMA, "name": name,
        "system": {"kind": "two_link_arm", "params": {"tau_max": tau_max}},
        "reduced_model": "single_integrator",
        "desired": {"kind": "constant", "value": list(mu)},
        "filter": {"alpha": 0.2},
        "controller": ({"kind": "d", "kd": gain} if controller == "d"
                       else {"kind": controller, "k": gain}),
        "initial": {"q": list(q0), "qdot": list(v0)},
        "duration": duration, "step": step,
    }
    if disturbance is not None:
        doc["disturbance"] = disturbance
    return doc


def arm_scenario(**kwargs):
    return scenario_from_dict(arm_doc(**kwargs))


def spatial_doc(*, obstacles=((2.0, 0.35, 0.8), (4.0, -0.45, 0.8)),
                delta=0.5, kv=0.16, komega=0.8, goal=(6.0, 0.0),
                saturation=None, alpha=0.2, weight_r=0.25,
                q0=(0.0, 0.0, 0.0, -0.138), v0=(0.0, 0.0, 0.0),
                duration=45.0, step=1e-3, name="spatial"):
    return {
        "schema": SCHEMA, "name": name,
        "system": {"kind": "segway_spatial",
                   "params": {"track_width": 0.5, "yaw_inertia": 2.0}},
        "cbf": {"kind": "heading", "delta": delta,
                "obstacles": [{"center": [o[0], o[1]], "radius": o[2]}
                              for o in obstacles]},
        "reduced_model": "unicycle",
        "desired": {"kind": "unicycle_goal", "kv": kv, "komega": komega,
                    "goal": list(goal), "saturation": saturation},
        "filter": {"alpha": alpha, "weight_r": weight_r},
        "controller": {"kind": "segway_spatial", "k_pdot": 50.0, "k_phi": 150.0,
                       "k_phidot": 40.0, "k_psidot": 10.0},
        "initial": {"q": list(q0), "qdot": list(v0)},
        "duration": duration, "step": step,
        "workspace": {"bounds": [[-1.0, 7.0], [-3.0, 3.0], [-3.2, 3.2], [-0.6, 0.6]],
                      "resolution": 0.0001},
    }


def segway_wall_doc(*, limit=2.0, pdot_d=1.0, alpha=0.5, q0=(0.0, -0.138),
                    v0=(0.0, 0.0), duration=15.0, step=5e-4, params=None,
                    gains=(50.0, 150.0, 40.0), disturbance=None, name="wall"):
    doc = {
        "schema": SCHEMA, "name": name,
        "system": {"kind": "segway_planar"},
        "cbf": {"kind": "halfspace", "limit": limit, "axis": 0},
        "reduced_model": "single_axis",
        "desired": {"kind": "constant", "value": [pdot_d]},
        "filter": {"alpha": alpha},
        "controller": {"kind": "segway_planar", "k_pdot": gains[0],
                       "k_phi": gains[1], "k_phidot": gains[2]},
        "initial": {"q": list(q0), "qdot": list(v0)},
        "duration": duration, "step": step,
        "workspace": {"bounds": [[-1.0, 2.5], [-0.6, 0.6]], "resolution": 0.0001},
    }
    if params:
        doc["system"]["params"] = dict(params)
    if disturbance is not None:
        doc["disturbance"] = disturbance
    return doc

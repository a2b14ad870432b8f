"""Scenario definition and its YAML file format.

A scenario file is a nested key-value document (YAML) versioned by its
``schema`` field; unknown keys anywhere in the document are rejected so
typos fail loudly. Units are fixed by the schema and documented in the
bundled files: positions in m, angles in rad, velocities in m/s and
rad/s, time in s, rates (alpha) in 1/s, voltages in V, torques in N m.

Bundled scenarios ship inside the package under ``data/scenarios``;
the ``VELOSHIELD_SCENARIO_DIR`` environment variable prepends a user
directory to the lookup path.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import yaml

from .errors import ScenarioError
from .tracking import SegwayGains

__all__ = [
    "SCHEMA_ID",
    "DisturbanceSpec",
    "CbfSpec",
    "DesiredSpec",
    "ControllerSpec",
    "WorkspaceSpec",
    "Scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "load_scenario",
    "save_scenario",
    "apply_override",
    "bundled_scenario_names",
    "resolve_scenario_path",
]

SCHEMA_ID = "veloshield/scenario/v1"

_SYSTEMS = ("double_integrator", "segway_planar", "segway_spatial",
            "two_link_arm", "kinematic")
_REDUCED = ("single_integrator", "unicycle", "single_axis")
_CBF_KINDS = ("distance", "heading", "halfspace")
_LAW_KINDS = ("proportional", "unicycle_goal", "constant")
_CONTROLLERS = ("d", "d_gravity", "computed_torque",
                "segway_planar", "segway_spatial", "none")
_FEEDFORWARD = ("analytic", "finite_difference")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Deterministic sinusoidal input disturbance d(t) = a sin(w t + phase).

    Amplitude is per input channel; frequency and phase are shared so the
    supremum over time of the Euclidean norm is exactly ||a||.
    """

    amplitude: np.ndarray
    frequency: float
    phase: float = 0.0

    @property
    def d_inf(self) -> float:
        return float(np.linalg.norm(self.amplitude))


@dataclass(frozen=True)
class CbfSpec:
    kind: str
    obstacles: Tuple[Tuple[float, float, float], ...] = ()
    delta: Optional[float] = None
    limit: Optional[float] = None
    axis: int = 0


@dataclass(frozen=True)
class DesiredSpec:
    kind: str
    kp: Optional[float] = None
    kv: Optional[float] = None
    komega: Optional[float] = None
    goal: Optional[np.ndarray] = None
    saturation: Optional[float] = None
    value: Optional[np.ndarray] = None


@dataclass(frozen=True)
class ControllerSpec:
    kind: str
    kd: Optional[np.ndarray] = None
    k: Optional[np.ndarray] = None
    feedforward: str = "analytic"
    segway: Optional[SegwayGains] = None


@dataclass(frozen=True)
class WorkspaceSpec:
    bounds: Tuple[Tuple[float, float], ...]
    resolution: float = 0.01
    safety_factor: float = 1.1


@dataclass(frozen=True)
class Scenario:
    name: str
    system: str
    q0: np.ndarray
    qdot0: Optional[np.ndarray]
    duration: float
    step: float
    alpha: float
    reduced_model: str
    desired: DesiredSpec
    controller: ControllerSpec
    cbf: Optional[CbfSpec] = None
    weight_r: Optional[float] = None
    disturbance: Optional[DisturbanceSpec] = None
    workspace: Optional[WorkspaceSpec] = None
    system_params: dict = field(default_factory=dict)

    def nsteps(self) -> int:
        n = int(round(self.duration / self.step))
        if abs(n * self.step - self.duration) > 1e-9 * max(1.0, self.duration):
            raise ScenarioError("duration must be an integer multiple of step")
        return n

    def with_values(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


def _require(cond: bool, msg: str):
    if not cond:
        raise ScenarioError(msg)


def _check_keys(block: dict, allowed, path: str):
    _require(isinstance(block, dict), f"{path}: expected a mapping")
    unknown = sorted(set(block) - set(allowed))
    _require(not unknown, f"{path}: unknown keys {unknown}")


def _vector(value, path: str, size: Optional[int] = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(f"{path}: expected a numeric vector") from None
    _require(arr.ndim == 1, f"{path}: expected a flat vector")
    _require(np.isfinite(arr).all(), f"{path}: entries must be finite")
    if size is not None:
        _require(arr.size == size, f"{path}: expected {size} entries")
    return arr


def _positive(value, path: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{path}: expected a number") from None
    _require(math.isfinite(v) and v > 0, f"{path}: must be positive")
    return v


def scenario_from_dict(doc: dict) -> Scenario:
    """Parse and validate a scenario document (strict keys everywhere)."""
    _check_keys(doc, {"schema", "name", "system", "cbf", "reduced_model",
                      "desired", "filter", "controller", "initial",
                      "duration", "step", "disturbance", "workspace"},
                "scenario")
    _require(doc.get("schema") == SCHEMA_ID,
             f"scenario: schema must be {SCHEMA_ID!r}, got {doc.get('schema')!r}")
    name = str(doc.get("name", "unnamed"))

    sys_block = dict(doc.get("system") or {})
    _check_keys(sys_block, {"kind", "params"}, "system")
    system = sys_block.get("kind")
    _require(system in _SYSTEMS, f"system.kind: must be one of {_SYSTEMS}")
    params = dict(sys_block.get("params") or {})

    cbf = None
    if doc.get("cbf") is not None:
        block = dict(doc["cbf"])
        _check_keys(block, {"kind", "obstacles", "delta", "limit", "axis"}, "cbf")
        kind = block.get("kind")
        _require(kind in _CBF_KINDS, f"cbf.kind: must be one of {_CBF_KINDS}")
        obstacles = ()
        if kind in ("distance", "heading"):
            raw = block.get("obstacles")
            _require(isinstance(raw, list) and raw, "cbf.obstacles: non-empty list required")
            rows = []
            for i, item in enumerate(raw):
                _check_keys(item, {"center", "radius"}, f"cbf.obstacles[{i}]")
                center = _vector(item.get("center"), f"cbf.obstacles[{i}].center", 2)
                radius = _positive(item.get("radius"), f"cbf.obstacles[{i}].radius")
                rows.append((float(center[0]), float(center[1]), radius))
            obstacles = tuple(rows)
        delta = None
        if kind == "heading":
            delta = _positive(block.get("delta"), "cbf.delta")
        limit = None
        axis = int(block.get("axis", 0))
        if kind == "halfspace":
            _require("limit" in block, "cbf.limit: required for halfspace barriers")
            limit = float(block["limit"])
        cbf = CbfSpec(kind=kind, obstacles=obstacles, delta=delta,
                      limit=limit, axis=axis)

    reduced = doc.get("reduced_model")
    _require(reduced in _REDUCED, f"reduced_model: must be one of {_REDUCED}")

    block = dict(doc.get("desired") or {})
    _check_keys(block, {"kind", "kp", "kv", "komega", "goal", "saturation", "value"},
                "desired")
    law_kind = block.get("kind")
    _require(law_kind in _LAW_KINDS, f"desired.kind: must be one of {_LAW_KINDS}")
    # default saturation 1 m/s; an explicit null disables clamping
    saturation = block.get("saturation", 1.0) if law_kind != "constant" else block.get("saturation")
    if saturation is not None:
        saturation = _positive(saturation, "desired.saturation")
    if law_kind == "proportional":
        desired = DesiredSpec(kind=law_kind,
                              kp=_positive(block.get("kp"), "desired.kp"),
                              goal=_vector(block.get("goal"), "desired.goal"),
                              saturation=saturation)
    elif law_kind == "unicycle_goal":
        desired = DesiredSpec(kind=law_kind,
                              kv=_positive(block.get("kv"), "desired.kv"),
                              komega=_positive(block.get("komega"), "desired.komega"),
                              goal=_vector(block.get("goal"), "desired.goal", 2),
                              saturation=saturation)
    else:
        desired = DesiredSpec(kind=law_kind,
                              value=_vector(block.get("value"), "desired.value"),
                              saturation=saturation)

    block = dict(doc.get("filter") or {})
    _check_keys(block, {"alpha", "weight_r"}, "filter")
    alpha = _positive(block.get("alpha"), "filter.alpha")
    weight_r = block.get("weight_r")
    if weight_r is not None:
        weight_r = _positive(weight_r, "filter.weight_r")

    block = dict(doc.get("controller") or {})
    _check_keys(block, {"kind", "kd", "k", "feedforward",
                        "k_pdot", "k_phi", "k_phidot", "k_psidot"}, "controller")
    ckind = block.get("kind")
    _require(ckind in _CONTROLLERS, f"controller.kind: must be one of {_CONTROLLERS}")
    feedforward = block.get("feedforward", "analytic")
    _require(feedforward in _FEEDFORWARD,
             f"controller.feedforward: must be one of {_FEEDFORWARD}")
    kd = k = segway = None
    if ckind == "d":
        _require("kd" in block, "controller.kd: required for the d controller")
        kd = np.asarray(block["kd"], dtype=float)
    elif ckind in ("d_gravity", "computed_torque"):
        _require("k" in block, "controller.k: required")
        k = np.asarray(block["k"], dtype=float)
    elif ckind in ("segway_planar", "segway_spatial"):
        segway = SegwayGains(
            k_pdot=float(block.get("k_pdot", 50.0)),
            k_phi=float(block.get("k_phi", 150.0)),
            k_phidot=float(block.get("k_phidot", 40.0)),
            k_psidot=float(block.get("k_psidot", 10.0)),
        )
    controller = ControllerSpec(kind=ckind, kd=kd, k=k,
                                feedforward=feedforward, segway=segway)

    block = dict(doc.get("initial") or {})
    _check_keys(block, {"q", "qdot"}, "initial")
    q0 = _vector(block.get("q"), "initial.q")
    qdot0 = None
    if system != "kinematic":
        qdot0 = _vector(block.get("qdot"), "initial.qdot")
    else:
        _require(block.get("qdot") is None,
                 "initial.qdot: not allowed for kinematic scenarios")

    duration = _positive(doc.get("duration"), "duration")
    step = _positive(doc.get("step"), "step")
    _require(duration >= step, "duration: must be at least one step")

    disturbance = None
    if doc.get("disturbance") is not None:
        block = dict(doc["disturbance"])
        _check_keys(block, {"amplitude", "frequency", "phase"}, "disturbance")
        amp = _vector(block.get("amplitude"), "disturbance.amplitude")
        _require((amp >= 0).all(), "disturbance.amplitude: entries must be >= 0")
        disturbance = DisturbanceSpec(
            amplitude=amp,
            frequency=float(block.get("frequency", 1.0)),
            phase=float(block.get("phase", 0.0)))
        _require(system != "kinematic",
                 "disturbance: kinematic scenarios have no input channel")

    workspace = None
    if doc.get("workspace") is not None:
        block = dict(doc["workspace"])
        _check_keys(block, {"bounds", "resolution", "safety_factor"}, "workspace")
        raw = block.get("bounds")
        _require(isinstance(raw, list) and raw, "workspace.bounds: list of [lo, hi]")
        bounds = []
        for i, pair in enumerate(raw):
            pair = _vector(pair, f"workspace.bounds[{i}]", 2)
            _require(pair[0] < pair[1], f"workspace.bounds[{i}]: lo < hi required")
            bounds.append((float(pair[0]), float(pair[1])))
        workspace = WorkspaceSpec(bounds=tuple(bounds),
                                  resolution=float(block.get("resolution", 0.01)),
                                  safety_factor=float(block.get("safety_factor", 1.1)))

    scn = Scenario(name=name, system=system, q0=q0, qdot0=qdot0,
                   duration=duration, step=step, alpha=alpha,
                   reduced_model=reduced, desired=desired, controller=controller,
                   cbf=cbf, weight_r=weight_r, disturbance=disturbance,
                   workspace=workspace, system_params=params)
    _validate_combination(scn)
    scn.nsteps()
    return scn


def _validate_combination(scn: Scenario):
    s = scn.system
    if s == "double_integrator":
        _require(scn.q0.size == 2 and scn.qdot0.size == 2,
                 "initial: double integrator state is planar")
        _require(scn.reduced_model == "single_integrator",
                 "reduced_model: double integrator uses single_integrator")
        _require(scn.controller.kind in ("d", "computed_torque"),
                 "controller.kind: double integrator supports d / computed_torque")
        _require(scn.cbf is None or scn.cbf.kind == "distance",
                 "cbf.kind: double integrator supports distance barriers")
        _require(scn.desired.kind in ("proportional", "constant"),
                 "desired.kind: proportional or constant for double integrator")
    elif s == "kinematic":
        if scn.reduced_model == "single_integrator":
            _require(scn.q0.size == 2, "initial.q: planar kinematic point")
            _require(scn.desired.kind == "proportional",
                     "desired.kind: proportional for the kinematic point")
            _require(scn.cbf is not None and scn.cbf.kind == "distance",
                     "cbf: distance barrier required")
        elif scn.reduced_model == "unicycle":
            _require(scn.q0.size == 3, "initial.q: (x, y, psi)")
            _require(scn.desired.kind == "unicycle_goal",
                     "desired.kind: unicycle_goal for the unicycle")
            _require(scn.cbf is not None and scn.cbf.kind == "heading",
                     "cbf: heading barrier required")
            _require(scn.weight_r is not None, "filter.weight_r: required")
        else:
            raise ScenarioError("reduced_model: kinematic scenarios use "
                                "single_integrator or unicycle")
        _require(scn.controller.kind == "none",
                 "controller.kind: kinematic scenarios use 'none'")
    elif s == "segway_planar":
        _require(scn.q0.size == 2 and scn.qdot0.size == 2, "initial: (p, phi) model")
        _require(scn.cbf is not None and scn.cbf.kind == "halfspace" and scn.cbf.axis == 0,
                 "cbf: halfspace barrier on the wheel position required")
        _require(scn.desired.kind == "constant" and scn.desired.value.size == 1,
                 "desired: constant scalar forward velocity required")
        _require(scn.reduced_model == "single_axis",
                 "reduced_model: single_axis for the planar balancing robot")
        _require(scn.controller.kind == "segway_planar", "controller.kind mismatch")
    elif s == "segway_spatial":
        _require(scn.q0.size == 4, "initial.q: (x, y, psi, phi)")
        _require(scn.qdot0.size == 3, "initial.qdot: (v, phidot, psidot)")
        _require(scn.cbf is not None and scn.cbf.kind == "heading",
                 "cbf: heading barrier required")
        _require(scn.desired.kind == "unicycle_goal", "desired.kind mismatch")
        _require(scn.reduced_model == "unicycle", "reduced_model: unicycle required")
        _require(scn.controller.kind == "segway_spatial", "controller.kind mismatch")
        _require(scn.weight_r is not None, "filter.weight_r: required")
    elif s == "two_link_arm":
        _require(scn.q0.size == 2 and scn.qdot0.size == 2, "initial: two joints")
        _require(scn.cbf is None, "cbf: not supported on the arm scenarios")
        _require(scn.desired.kind == "constant" and scn.desired.value.size == 2,
                 "desired: constant joint-velocity command required")
        _require(scn.controller.kind in ("d", "d_gravity", "computed_torque"),
                 "controller.kind mismatch")


def scenario_to_dict(scn: Scenario) -> dict:
    """Serialize a scenario back to its document form."""
    doc = {
        "schema": SCHEMA_ID,
        "name": scn.name,
        "system": {"kind": scn.system},
    }
    if scn.system_params:
        doc["system"]["params"] = dict(scn.system_params)
    if scn.cbf is not None:
        block = {"kind": scn.cbf.kind}
        if scn.cbf.obstacles:
            block["obstacles"] = [
                {"center": [o[0], o[1]], "radius": o[2]} for o in scn.cbf.obstacles]
        if scn.cbf.delta is not None:
            block["delta"] = scn.cbf.delta
        if scn.cbf.limit is not None:
            block["limit"] = scn.cbf.limit
            block["axis"] = scn.cbf.axis
        doc["cbf"] = block
    doc["reduced_model"] = scn.reduced_model
    d = scn.desired
    block = {"kind": d.kind}
    if d.kp is not None:
        block["kp"] = d.kp
    if d.kv is not None:
        block["kv"] = d.kv
    if d.komega is not None:
        block["komega"] = d.komega
    if d.goal is not None:
        block["goal"] = [float(v) for v in d.goal]
    if d.saturation is not None:
        block["saturation"] = d.saturation
    if d.value is not None:
        block["value"] = [float(v) for v in d.value]
    doc["desired"] = block
    doc["filter"] = {"alpha": scn.alpha}
    if scn.weight_r is not None:
        doc["filter"]["weight_r"] = scn.weight_r
    c = scn.controller
    block = {"kind": c.kind}
    if c.kd is not None:
        block["kd"] = c.kd.tolist()
    if c.k is not None:
        block["k"] = c.k.tolist()
    if c.kind == "computed_torque":
        block["feedforward"] = c.feedforward
    if c.segway is not None:
        block.update({"k_pdot": c.segway.k_pdot, "k_phi": c.segway.k_phi,
                      "k_phidot": c.segway.k_phidot})
        if c.kind == "segway_spatial":
            block["k_psidot"] = c.segway.k_psidot
    doc["controller"] = block
    doc["initial"] = {"q": [float(v) for v in scn.q0]}
    if scn.qdot0 is not None:
        doc["initial"]["qdot"] = [float(v) for v in scn.qdot0]
    doc["duration"] = scn.duration
    doc["step"] = scn.step
    if scn.disturbance is not None:
        doc["disturbance"] = {
            "amplitude": [float(v) for v in scn.disturbance.amplitude],
            "frequency": scn.disturbance.frequency,
            "phase": scn.disturbance.phase,
        }
    if scn.workspace is not None:
        doc["workspace"] = {
            "bounds": [[lo, hi] for lo, hi in scn.workspace.bounds],
            "resolution": scn.workspace.resolution,
            "safety_factor": scn.workspace.safety_factor,
        }
    return doc


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file."""
    try:
        with open(path, "r") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a mapping")
    return scenario_from_dict(doc)


def save_scenario(scn: Scenario, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_dict(scn), fh, sort_keys=False)


def apply_override(doc: dict, dotted: str, value) -> dict:
    """Set a dotted-path key (e.g. 'filter.alpha') in a scenario document."""
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ScenarioError(f"parameter {dotted!r} not found in scenario")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ScenarioError(f"parameter {dotted!r} not found in scenario")
    node[parts[-1]] = value
    return doc


def _bundled_dir():
    return resources.files("veloshield").joinpath("data/scenarios")


def bundled_scenario_names() -> list:
    """Names of shipped scenarios plus any in VELOSHIELD_SCENARIO_DIR."""
    names = {}
    base = _bundled_dir()
    for entry in sorted(base.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".yaml"):
            names[entry.name[:-5]] = str(entry)
    extra = os.environ.get("VELOSHIELD_SCENARIO_DIR")
    if extra:
        for p in sorted(Path(extra).glob("*.yaml")):
            names[p.stem] = str(p)
    return sorted(names)


def resolve_scenario_path(name_or_path: str) -> str:
    """Resolve an argument to a scenario file path.

    Existing paths win; otherwise the name (with or without .yaml) is
    looked up in VELOSHIELD_SCENARIO_DIR, then in the bundled set.
    """
    p = Path(name_or_path)
    if p.exists():
        return str(p)
    stem = p.name[:-5] if p.name.endswith(".yaml") else p.name
    extra = os.environ.get("VELOSHIELD_SCENARIO_DIR")
    if extra:
        candidate = Path(extra) / f"{stem}.yaml"
        if candidate.exists():
            return str(candidate)
    candidate = _bundled_dir().joinpath(f"{stem}.yaml")
    if candidate.is_file():
        return str(candidate)
    raise ScenarioError(f"scenario {name_or_path!r} not found")

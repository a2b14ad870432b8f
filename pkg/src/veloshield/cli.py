"""Command-line front end.

Verbs:

* ``run``            simulate one scenario, write trajectory.csv + summary.yaml
* ``sweep``          rerun a scenario over a list of values for one parameter
* ``validate``       parse a scenario file and report problems
* ``list-scenarios`` show bundled scenario names

Outputs are written to a temporary directory and moved into place on
success, so a failed run leaves no partial files. A safety violation is a
result, not a failure: ``run`` still exits 0 and reports min_h in the
summary. Exit codes: 0 success, 2 bad scenario/arguments, 3 divergence.
"""
from __future__ import annotations

import argparse
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import _kernels
from .errors import DivergenceError, ScenarioError, VeloshieldError
from .scenario import (apply_override, bundled_scenario_names, load_scenario,
                       resolve_scenario_path, scenario_from_dict)
from .sim import initial_membership, safety_metrics, simulate, write_csv

SUMMARY_SCHEMA = "veloshield/summary/v1"


def _load_doc(path: str) -> dict:
    with open(path, "r") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a mapping")
    return doc


def _apply_flags(doc: dict, args) -> dict:
    if getattr(args, "step", None) is not None:
        doc["step"] = args.step
    if getattr(args, "duration", None) is not None:
        doc["duration"] = args.duration
    return doc


def _summary(log, backend: str) -> dict:
    metrics = safety_metrics(log)
    mem = initial_membership(log)
    return {
        "schema": SUMMARY_SCHEMA,
        "scenario": log.scenario.name,
        "backend": backend,
        "samples": len(log),
        "metrics": metrics.to_dict(),
        "certificate": log.certificate.to_dict() if log.certificate else None,
        "initial_membership": mem.to_dict() if mem else None,
    }


def _write_outputs(log, backend: str, directory: Path) -> dict:
    with open(directory / "trajectory.csv", "w") as fh:
        write_csv(log, fh)
    summary = _summary(log, backend)
    with open(directory / "summary.yaml", "w") as fh:
        yaml.safe_dump(summary, fh, sort_keys=False)
    return summary


def _move_into_place(tmp: Path, out: Path):
    if out.exists():
        raise ScenarioError(f"output directory {out} already exists")
    out.parent.mkdir(parents=True, exist_ok=True)
    os.replace(tmp, out)


def _cmd_run(args) -> int:
    path = resolve_scenario_path(args.scenario)
    doc = _apply_flags(_load_doc(path), args)
    scn = scenario_from_dict(doc)
    backend = _kernels.get_backend(args.backend).BACKEND
    log = simulate(scn, backend=args.backend)
    out = Path(args.out)
    tmp = Path(tempfile.mkdtemp(prefix=".veloshield-", dir=out.parent if out.parent.exists() else None))
    try:
        _write_outputs(log, backend, tmp)
        _move_into_place(tmp, out)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp, ignore_errors=True)
    metrics = safety_metrics(log)
    print(f"{scn.name}: {len(log)} samples, min_h={metrics.min_h:.6g} "
          f"-> {out}")
    return 0


def _parse_values(raw: str) -> list:
    values = [float(v) for v in raw.split(",") if v.strip() != ""]
    if not values:
        raise ScenarioError("sweep requires a non-empty value list")
    return values


def _sweep_one(payload):
    doc, param, value, backend, subdir = payload
    doc = apply_override(doc, param, value)
    scn = scenario_from_dict(doc)
    log = simulate(scn, backend=backend)
    backend_name = _kernels.get_backend(backend).BACKEND
    summary = _write_outputs(log, backend_name, Path(subdir))
    return value, summary


def _cmd_sweep(args) -> int:
    path = resolve_scenario_path(args.scenario)
    base_doc = _apply_flags(_load_doc(path), args)
    values = _parse_values(args.values)
    # validate every override before any work
    for v in values:
        scenario_from_dict(apply_override(yaml.safe_load(yaml.safe_dump(base_doc)),
                                          args.param, v))
    out = Path(args.out)
    tmp = Path(tempfile.mkdtemp(prefix=".veloshield-", dir=out.parent if out.parent.exists() else None))
    try:
        leaf = args.param.split(".")[-1]
        jobs = []
        for v in values:
            subdir = tmp / f"{leaf}={v:g}"
            subdir.mkdir()
            jobs.append((yaml.safe_load(yaml.safe_dump(base_doc)), args.param,
                         v, args.backend, str(subdir)))
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_sweep_one, jobs))
        else:
            results = [_sweep_one(j) for j in jobs]
        with open(tmp / "sweep.csv", "w") as fh:
            fh.write(f"{leaf},min_h,safe,theorem_applicable,in_S_V_t0\n")
            for value, summary in results:
                metrics = summary["metrics"]
                cert = summary["certificate"]
                mem = summary["initial_membership"]
                safe = metrics["min_h"] >= 0.0
                applicable = bool(cert["theorem_applicable"]) if cert else False
                in_sv = bool(mem["in_S_V"]) if mem else False
                fh.write(f"{value:g},{metrics['min_h']!r},{safe},{applicable},{in_sv}\n")
        _move_into_place(tmp, out)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp, ignore_errors=True)
    print(f"swept {args.param} over {values} -> {out}")
    return 0


def _cmd_validate(args) -> int:
    path = resolve_scenario_path(args.scenario)
    scn = load_scenario(path)
    print(f"{path}: ok ({scn.name}, system={scn.system}, "
          f"{scn.nsteps() + 1} samples at step={scn.step})")
    return 0


def _cmd_list(args) -> int:
    for name in bundled_scenario_names():
        print(name)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veloshield",
        description="Safe-velocity filtering scenarios: run, sweep, inspect.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write outputs")
    run.add_argument("scenario", help="scenario file path or bundled name")
    run.add_argument("--out", required=True, help="output directory (must not exist)")
    run.add_argument("--step", type=float, default=None, help="override step (s)")
    run.add_argument("--duration", type=float, default=None, help="override duration (s)")
    run.add_argument("--backend", default=None, choices=["native", "python"],
                     help="kernel backend (default: best available)")
    run.add_argument("--seed", type=int, default=None,
                     help="reserved; bundled scenarios are deterministic")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="rerun a scenario over parameter values")
    sweep.add_argument("scenario")
    sweep.add_argument("--param", required=True,
                       help="dotted parameter path, e.g. filter.alpha")
    sweep.add_argument("--values", required=True,
                       help="comma-separated numeric values")
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--step", type=float, default=None)
    sweep.add_argument("--duration", type=float, default=None)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--backend", default=None, choices=["native", "python"])
    sweep.add_argument("--seed", type=int, default=None,
                       help="reserved; bundled scenarios are deterministic")
    sweep.set_defaults(func=_cmd_sweep)

    validate = sub.add_parser("validate", help="parse a scenario file only")
    validate.add_argument("scenario")
    validate.set_defaults(func=_cmd_validate)

    lst = sub.add_parser("list-scenarios", help="list bundled scenarios")
    lst.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except VeloshieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

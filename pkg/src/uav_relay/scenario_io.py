"""Scenario files, run artifacts, and log-based verification.

A scenario is a human-editable TOML tree (sections: environment, uav, pso,
behavior, weights, run); the same structure parsed from JSON is accepted for
programmatic generation. Every output file carries a provenance header with
the tool version, a hash of the canonical scenario, and the master seed.

Wall-clock search timings are serialized to a separate timings.json: they are
the one nondeterministic quantity, and keeping them out of metrics.json lets
identically seeded runs produce byte-identical metrics and event logs.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .behavior import BehaviorGains
from .deployment import RouteGraph, RunResult
from .environment import (Environment, Obstacle, Terrain, flat_terrain,
                          ground_height, load_terrain, ramp_terrain,
                          random_terrain)
from .fitness import FitnessWeights
from .pso import PsoConfig
from .vehicle import UavParams

VERSION = "0.1.0"


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


@dataclass(frozen=True)
class TerrainSpec:
    kind: str = "flat"          # flat | ramp | random | file
    rows: int = 64
    cols: int = 64
    cell_size: float = 20.0
    origin: tuple[float, float] = (0.0, 0.0)
    height: float = 0.0         # flat
    start_height: float = 0.0   # ramp
    end_height: float = 0.0
    base_height: float = 0.0    # random
    amplitude: float = 0.0
    smoothness: float = 3.0
    seed: int = 0
    file: str = ""              # file

    def build(self) -> Terrain:
        if self.kind == "flat":
            return flat_terrain(self.rows, self.cols, self.cell_size,
                                self.height, self.origin)
        if self.kind == "ramp":
            return ramp_terrain(self.rows, self.cols, self.cell_size,
                                self.start_height, self.end_height, self.origin)
        if self.kind == "random":
            return random_terrain(self.rows, self.cols, self.cell_size,
                                  self.base_height, self.amplitude,
                                  self.seed, self.smoothness, self.origin)
        if self.kind == "file":
            return load_terrain(self.file)
        raise ScenarioError(f"unknown terrain kind {self.kind!r}")


@dataclass(frozen=True)
class Scenario:
    terrain: TerrainSpec
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]
    base: tuple[float, float, float]
    destination: tuple[float, float, float]
    obstacles: tuple[Obstacle, ...] = ()
    uav: UavParams = field(default_factory=UavParams)
    uav_budget: int = 8
    pso: PsoConfig = field(default_factory=PsoConfig)
    gains: BehaviorGains = field(default_factory=BehaviorGains)
    weights: FitnessWeights = field(default_factory=FitnessWeights)
    dt: float = 0.1
    master_seed: int = 0
    tick_budget: int = 100_000
    name: str = "scenario"


def build_environment(scenario: Scenario) -> Environment:
    return Environment(terrain=scenario.terrain.build(),
                       obstacles=scenario.obstacles,
                       bounds=scenario.bounds)


# --- parsing -----------------------------------------------------------------

def _take(table: dict, cls, section: str, **overrides):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ScenarioError(f"[{section}]: unknown keys {sorted(unknown)}")
    kw = dict(table)
    kw.update(overrides)
    for key, val in kw.items():
        if isinstance(val, list):
            kw[key] = tuple(val)
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[{section}]: {exc}") from exc


def scenario_from_dict(data: dict, base_dir: str = ".") -> Scenario:
    env = data.get("environment", {})
    terrain_tbl = dict(env.get("terrain", {}))
    if terrain_tbl.get("file"):
        terrain_tbl["file"] = os.path.normpath(
            os.path.join(base_dir, terrain_tbl["file"]))
    terrain = _take(terrain_tbl, TerrainSpec, "environment.terrain")
    obstacles = tuple(_take(ob, Obstacle, "environment.obstacles")
                      for ob in env.get("obstacles", []))
    try:
        bounds = (tuple(float(v) for v in env["bounds_min"]),
                  tuple(float(v) for v in env["bounds_max"]))
    except KeyError as exc:
        raise ScenarioError(f"[environment]: missing {exc}") from exc

    run = data.get("run", {})
    for key in ("base", "destination"):
        if key not in run:
            raise ScenarioError(f"[run]: missing {key!r}")
    scenario = Scenario(
        terrain=terrain,
        bounds=bounds,
        obstacles=obstacles,
        base=tuple(float(v) for v in run["base"]),
        destination=tuple(float(v) for v in run["destination"]),
        uav=_take(data.get("uav", {}), UavParams, "uav"),
        uav_budget=int(run.get("uav_budget", 8)),
        pso=_take(data.get("pso", {}), PsoConfig, "pso"),
        gains=_take(data.get("behavior", {}), BehaviorGains, "behavior"),
        weights=_take(data.get("weights", {}), FitnessWeights, "weights"),
        dt=float(run.get("dt", 0.1)),
        master_seed=int(run.get("master_seed", 0)),
        tick_budget=int(run.get("tick_budget", 100_000)),
        name=str(data.get("name", "scenario")))
    validate_scenario(scenario)
    return scenario


def validate_scenario(sc: Scenario) -> None:
    if sc.base == sc.destination:
        raise ScenarioError("base and destination must differ")
    if sc.uav_budget < 1:
        raise ScenarioError("uav_budget must be at least 1")
    if sc.dt <= 0:
        raise ScenarioError("dt must be positive")
    env = build_environment(sc)
    for label, p in (("base", sc.base), ("destination", sc.destination)):
        if not env.contains(p):
            raise ScenarioError(f"{label} outside world bounds")
        try:
            g = ground_height(env, p[:2])
        except Exception as exc:
            raise ScenarioError(f"{label} outside terrain extent: {exc}") from exc
        if p[2] <= g:
            raise ScenarioError(f"{label} must be above terrain "
                                f"(z={p[2]}, ground={g:.2f})")


def load_scenario(path) -> Scenario:
    path = os.fspath(path)
    with open(path, "rb") as f:
        if path.endswith(".json"):
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}: {exc}") from exc
        else:
            try:
                data = tomllib.load(f)
            except tomllib.TOMLDecodeError as exc:
                raise ScenarioError(f"{path}: {exc}") from exc
    return scenario_from_dict(data, base_dir=os.path.dirname(path) or ".")


# --- serialization -----------------------------------------------------------

def scenario_to_dict(sc: Scenario) -> dict:
    def clean(obj) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v
                for k, v in dataclasses.asdict(obj).items()}

    return {
        "name": sc.name,
        "environment": {
            "bounds_min": list(sc.bounds[0]),
            "bounds_max": list(sc.bounds[1]),
            "terrain": clean(sc.terrain),
            "obstacles": [clean(ob) for ob in sc.obstacles],
        },
        "uav": clean(sc.uav),
        "pso": clean(sc.pso),
        "behavior": clean(sc.gains),
        "weights": clean(sc.weights),
        "run": {
            "base": list(sc.base),
            "destination": list(sc.destination),
            "uav_budget": sc.uav_budget,
            "dt": sc.dt,
            "master_seed": sc.master_seed,
            "tick_budget": sc.tick_budget,
        },
    }


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)} to TOML")


def serialize_scenario(sc: Scenario) -> str:
    d = scenario_to_dict(sc)
    out = [f"name = {_toml_value(d['name'])}", "", "[environment]"]
    out.append(f"bounds_min = {_toml_value(d['environment']['bounds_min'])}")
    out.append(f"bounds_max = {_toml_value(d['environment']['bounds_max'])}")
    out += ["", "[environment.terrain]"]
    out += [f"{k} = {_toml_value(v)}"
            for k, v in d["environment"]["terrain"].items()]
    for ob in d["environment"]["obstacles"]:
        out += ["", "[[environment.obstacles]]"]
        out += [f"{k} = {_toml_value(v)}" for k, v in ob.items()]
    for section in ("uav", "pso", "behavior", "weights", "run"):
        out += ["", f"[{section}]"]
        out += [f"{k} = {_toml_value(v)}" for k, v in d[section].items()]
    return "\n".join(out) + "\n"


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as f:
        f.write(serialize_scenario(sc))


def scenario_hash(sc: Scenario) -> str:
    canon = json.dumps(scenario_to_dict(sc), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# --- run artifacts -----------------------------------------------------------

def _provenance(sc: Scenario, seed: int) -> dict:
    return {"tool": f"uav-relay {VERSION}", "scenario_hash": scenario_hash(sc),
            "master_seed": seed}


def write_artifacts(result: RunResult, scenario: Scenario, outdir,
                    master_seed: int | None = None) -> dict:
    """Write all run outputs under outdir; returns the artifact path map."""
    seed = scenario.master_seed if master_seed is None else int(master_seed)
    os.makedirs(outdir, exist_ok=True)
    conv_dir = os.path.join(outdir, "convergence")
    os.makedirs(conv_dir, exist_ok=True)
    prov = _provenance(scenario, seed)
    header = (f"# tool={prov['tool']} scenario={prov['scenario_hash']} "
              f"master_seed={seed}\n")
    paths = {}

    paths["scenario"] = os.path.join(outdir, "scenario.toml")
    save_scenario(scenario, paths["scenario"])

    paths["trajectory"] = os.path.join(outdir, "trajectory.csv")
    with open(paths["trajectory"], "w") as f:
        f.write(header)
        f.write("tick,uav_id,x,y,z,psi,phase\n")
        for tick, uid, x, y, z, psi, phase in result.trajectories:
            f.write(f"{tick},{uid},{x:.6f},{y:.6f},{z:.6f},{psi:.6f},{phase}\n")

    paths["events"] = os.path.join(outdir, "events.jsonl")
    with open(paths["events"], "w") as f:
        f.write(json.dumps({"header": prov}, sort_keys=True) + "\n")
        for ev in result.events:
            f.write(json.dumps({"tick": ev.tick, "uav_id": ev.uav_id,
                                "event": ev.event, "payload": ev.payload},
                               sort_keys=True) + "\n")

    paths["metrics"] = os.path.join(outdir, "metrics.json")
    metrics = result.metrics.as_dict() if result.metrics else {}
    for row in metrics.get("per_uav", []):
        row.pop("searching_time_s", None)  # wall-clock lives in timings.json
    route = result.route
    route_doc = None
    if route is not None:
        route_doc = {
            "base": [float(v) for v in route.base],
            "nodes": [{"uav_id": uid, "position": [float(v) for v in pos]}
                      for uid, pos in route.uav_nodes],
            "destination": [float(v) for v in route.destination],
            "destination_reached": route.destination_reached,
            "links_m": [round(l, 4) for l in route.links],
        }
    with open(paths["metrics"], "w") as f:
        json.dump({"provenance": prov, "status": result.status,
                   "route": route_doc, "metrics": metrics}, f,
                  sort_keys=True, indent=1)
        f.write("\n")

    paths["timings"] = os.path.join(outdir, "timings.json")
    with open(paths["timings"], "w") as f:
        json.dump({"provenance": prov,
                   "search_time_s": {uid: [round(t, 6) for t in ts]
                                     for uid, ts in result.search_times.items()},
                   "total_search_time_s": round(
                       sum(sum(ts) for ts in result.search_times.values()), 6)},
                  f, sort_keys=True, indent=1)
        f.write("\n")

    paths["result"] = os.path.join(outdir, "result.json")
    with open(paths["result"], "w") as f:
        json.dump({"provenance": prov, "status": result.status,
                   "reason": result.reason, "ticks": result.ticks,
                   "uavs_deployed": result.uavs_deployed}, f,
                  sort_keys=True, indent=1)
        f.write("\n")

    for uid, k, trace in result.traces:
        p = os.path.join(conv_dir, f"{uid}_s{k:03d}.csv")
        with open(p, "w") as f:
            f.write(header)
            f.write("iteration,gbest_cost\n")
            for i, c in enumerate(trace):
                f.write(f"{i},{c:.9g}\n")
    paths["convergence_dir"] = conv_dir
    return paths


# --- verification from logs --------------------------------------------------

def verify_output(outdir) -> list[str]:
    """Re-check route validity and the safety properties from the written
    artifacts alone. Returns a list of violation descriptions (empty = ok)."""
    violations: list[str] = []
    scenario = load_scenario(os.path.join(outdir, "scenario.toml"))
    env = build_environment(scenario)
    params = scenario.uav

    with open(os.path.join(outdir, "metrics.json")) as f:
        metrics = json.load(f)
    route = metrics.get("route") or {}
    for k, link in enumerate(route.get("links_m", [])):
        if link > params.comm_range + 1e-6:
            violations.append(f"link {k} length {link} exceeds "
                              f"comm_range {params.comm_range}")
    if metrics.get("status") == "complete" and not route.get("destination_reached"):
        violations.append("status complete but route does not reach destination")

    by_tick: dict[int, list[tuple[str, float, float, float]]] = {}
    with open(os.path.join(outdir, "trajectory.csv")) as f:
        for line in f:
            if line.startswith("#") or line.startswith("tick,"):
                continue
            tick_s, uid, x, y, z, _psi, _phase = line.rstrip("\n").split(",")
            by_tick.setdefault(int(tick_s), []).append(
                (uid, float(x), float(y), float(z)))

    min_sep = 2.0 * params.size_d
    for tick, rows in by_tick.items():
        for uid, x, y, z in rows:
            try:
                g = ground_height(env, (x, y))
            except Exception:
                violations.append(f"tick {tick} {uid}: outside terrain extent")
                continue
            if z < g + params.altitude_min - 1e-6:
                violations.append(f"tick {tick} {uid}: altitude {z:.2f} below "
                                  f"clearance {g + params.altitude_min:.2f}")
            for ob in env.obstacles:
                if not ob.spans(z):
                    continue
                d = math.hypot(x - ob.center[0], y - ob.center[1])
                if d < ob.radius + params.size_d - 1e-6:
                    violations.append(f"tick {tick} {uid}: inside collision "
                                      f"radius of obstacle {ob.id}")
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                d = math.dist(rows[i][1:], rows[j][1:])
                if d < min_sep - 1e-6:
                    violations.append(f"tick {tick}: {rows[i][0]} and "
                                      f"{rows[j][0]} separated by {d:.2f} m")
    return violations

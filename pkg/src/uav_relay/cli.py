"""Command-line entry points: run, verify, sweep, gen-terrain."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .deployment import run_deployment
from .environment import save_terrain
from .scenario_io import (Scenario, ScenarioError, TerrainSpec, load_scenario,
                          scenario_hash, verify_output, write_artifacts)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_FAILURE = 2
EXIT_TIMEOUT = 3
EXIT_USAGE = 64


def _default_outdir(scenario: Scenario, seed: int) -> str:
    root = os.environ.get("UAV_RELAY_OUT", "out")
    return os.path.join(root, f"{scenario.name}_seed{seed}")


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = scenario.master_seed if args.seed is None else args.seed
    if args.seed is not None:
        scenario = __import__("dataclasses").replace(scenario, master_seed=seed)
    outdir = args.out or _default_outdir(scenario, seed)
    result = run_deployment(scenario, seed)
    paths = write_artifacts(result, scenario, outdir, seed)
    print(f"status={result.status} uavs={result.uavs_deployed} "
          f"ticks={result.ticks} out={outdir}")
    if result.status == "complete":
        for row in result.metrics.rows:
            print(f"  {row['uav_id']}: link={row['link_length_m']:.2f} m "
                  f"goals={row['temporary_goal_number']} "
                  f"deploy={row['deployment_time_s']:.1f} s")
        return EXIT_OK
    print(f"  reason: {result.reason}", file=sys.stderr)
    return EXIT_FAILURE if result.status == "failure" else EXIT_TIMEOUT


def _cmd_verify(args) -> int:
    violations = verify_output(args.outdir)
    if violations:
        for v in violations:
            print(f"VIOLATION: {v}", file=sys.stderr)
        print(f"{len(violations)} violation(s) found", file=sys.stderr)
        return EXIT_VIOLATION
    print("ok: route valid, clearance and separation hold for every sample")
    return EXIT_OK


def _parse_seed_range(spec: str) -> range:
    lo, sep, hi = spec.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("seed range must look like A..B")
    return range(int(lo), int(hi) + 1)


def _cmd_sweep(args) -> int:
    import dataclasses

    scenario = load_scenario(args.scenario)
    rows = []
    for seed in args.seeds:
        sc = dataclasses.replace(scenario, master_seed=seed)
        result = run_deployment(sc, seed)
        entry = {"seed": seed, "status": result.status,
                 "uavs": result.uavs_deployed}
        if result.status == "complete":
            m = result.metrics
            entry["mean_link_m"] = m.mean_link_length_excl_final
            entry["mean_deviation_m"] = m.mean_deviation_from_ideal
            entry["mean_target_angle_rad"] = float(np.mean(
                [r["actual_target_angle_rad"] for r in m.rows]))
            entry["deployment_time_s"] = max(
                (r["deployment_time_s"] for r in m.rows), default=0.0)
            entry["search_time_s"] = sum(
                sum(ts) for ts in result.search_times.values())
        rows.append(entry)
        print(f"seed {seed}: {entry}")

    done = [r for r in rows if r["status"] == "complete"]
    summary = {"scenario": scenario.name, "hash": scenario_hash(scenario),
               "runs": len(rows), "complete": len(done)}
    for key in ("mean_link_m", "mean_deviation_m", "mean_target_angle_rad",
                "deployment_time_s", "search_time_s"):
        vals = [r[key] for r in done if r.get(key) is not None]
        if vals:
            summary[key] = {"mean": float(np.mean(vals)),
                            "stddev": float(np.std(vals))}
    print(json.dumps(summary, indent=1, sort_keys=True))
    if args.out:
        with open(args.out, "w") as f:
            json.dump({"summary": summary, "runs": rows}, f,
                      indent=1, sort_keys=True)
    return EXIT_OK if len(done) == len(rows) else EXIT_FAILURE


def _cmd_gen_terrain(args) -> int:
    spec = TerrainSpec(kind=args.kind, rows=args.rows, cols=args.cols,
                       cell_size=args.cell_size, height=args.height,
                       start_height=args.height,
                       end_height=args.height + args.amplitude,
                       base_height=args.height, amplitude=args.amplitude,
                       smoothness=args.smoothness, seed=args.seed)
    save_terrain(spec.build(), args.out)
    print(f"wrote {args.kind} terrain {args.rows}x{args.cols} to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="uav-relay",
        description="Deploy a chain of UAV relays from a base station to a "
                    "target across terrain with obstacles.")
    sub = p.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute one deployment and write artifacts")
    runp.add_argument("scenario")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the scenario's master seed")
    runp.add_argument("--out", default=None, help="output directory")
    runp.set_defaults(func=_cmd_run)

    verp = sub.add_parser("verify", help="re-check a run's outputs from logs alone")
    verp.add_argument("outdir")
    verp.set_defaults(func=_cmd_verify)

    swp = sub.add_parser("sweep", help="run repeated seeded trials and aggregate")
    swp.add_argument("scenario")
    swp.add_argument("--seeds", type=_parse_seed_range, required=True,
                     metavar="A..B")
    swp.add_argument("--out", default=None, help="write aggregate JSON here")
    swp.set_defaults(func=_cmd_sweep)

    gtp = sub.add_parser("gen-terrain", help="emit a synthetic terrain file")
    gtp.add_argument("kind", choices=["flat", "ramp", "random"])
    gtp.add_argument("--rows", type=int, default=64)
    gtp.add_argument("--cols", type=int, default=64)
    gtp.add_argument("--cell-size", dest="cell_size", type=float, default=20.0)
    gtp.add_argument("--height", type=float, default=0.0)
    gtp.add_argument("--amplitude", type=float, default=20.0)
    gtp.add_argument("--smoothness", type=float, default=3.0)
    gtp.add_argument("--seed", type=int, default=0)
    gtp.add_argument("--out", required=True)
    gtp.set_defaults(func=_cmd_gen_terrain)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

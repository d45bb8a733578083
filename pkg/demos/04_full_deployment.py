#!/usr/bin/env python3
"""End-to-end relay deployment on the bundled paper-scale scenario.

UAVs launch one at a time from the base station. Each flies the established
route to the frontier node, then alternates position searches and short
reactive flights outward until the link back to its anchor is about to reach
the communication range, where it parks and becomes the next network node.
The chain stops when a UAV can see the destination and reach it directly.

Run from the repository root:

    python3 demos/04_full_deployment.py
"""
import numpy as np

from uav_relay import load_scenario, run_deployment

scenario = load_scenario("scenarios/paper_scale_1.toml")
print(f"scenario '{scenario.name}': base {list(scenario.base)} -> "
      f"destination {list(scenario.destination)}")
span = np.linalg.norm(np.subtract(scenario.destination, scenario.base))
print(f"span {span:.0f} m, comm range {scenario.uav.comm_range:.0f} m, "
      f"sensing range {scenario.uav.sense_range:.0f} m, "
      f"{len(scenario.obstacles)} obstacles near the line of sight\n")

result = run_deployment(scenario)

print(f"status: {result.status} after {result.ticks} ticks "
      f"({result.ticks * scenario.dt:.1f} s simulated)\n")

print(f"{'uav':6} {'link (m)':>9} {'goals':>6} {'deploy (s)':>11} "
      f"{'deviation (m)':>14} {'angle (rad)':>12}")
for row in result.metrics.rows:
    print(f"{row['uav_id']:6} {row['link_length_m']:9.1f} "
          f"{row['temporary_goal_number']:6d} "
          f"{row['deployment_time_s']:11.1f} "
          f"{row['deviation_from_ideal_m']:14.1f} "
          f"{row['actual_target_angle_rad']:12.4f}")

print(f"\nmean link length (excluding final hop): "
      f"{result.metrics.mean_link_length_excl_final:.1f} m")
print(f"mean deviation from the ideal straight-line chain: "
      f"{result.metrics.mean_deviation_from_ideal:.1f} m")

print("\nnetwork timeline (from the event log):")
for ev in result.events:
    if ev.event == "node_occupied":
        kind = "destination" if ev.payload["is_destination"] else "relay node"
        pos = np.round(ev.payload["position"], 1).tolist()
        print(f"  tick {ev.tick:5d}: {ev.uav_id} parks as {kind} at {pos}, "
              f"link {ev.payload['link_length']:.1f} m")

print("\nroute links:", [round(l, 1) for l in result.route.links])

#!/usr/bin/env python3
"""One particle-swarm position search, step by step.

A relay UAV sitting at its anchor node wants the best next waypoint inside
its 50 m sensing ball: far from obstacles, aimed at the destination, a full
sensing-radius step long, and stretching the link back toward (but never
past) the 300 m communication range. This script runs the search, prints the
convergence trace, and sanity-checks the optimum against random probing.

Run from the repository root:

    python3 demos/02_position_search.py
"""
import numpy as np

from uav_relay import (Environment, FitnessContext, FitnessWeights, Obstacle,
                       PsoConfig, UavParams, flat_terrain, search_optimal,
                       total_fitness_batch)

params = UavParams()  # D=1 m, S=10 m, R_C=300 m, R_S=50 m
env = Environment(
    terrain=flat_terrain(rows=51, cols=81, cell_size=25.0, height=0.0),
    obstacles=(Obstacle(id="pylon", center=(640.0, 520.0), radius=10.0,
                        base_height=0.0, top_height=300.0),),
    bounds=((0.0, 0.0, 0.0), (2000.0, 1250.0, 400.0)))

center = np.array([600.0, 500.0, 80.0])       # where the UAV is searching
anchor = np.array([380.0, 500.0, 80.0])       # previous node (220 m back)
target = np.array([1800.0, 500.0, 80.0])      # the destination

ctx = FitnessContext(current=center, previous_node=anchor, target=target,
                     obstacles=env.obstacles, params=params,
                     weights=FitnessWeights())

pos, cost, trace = search_optimal(center, ctx, env, PsoConfig(seed=42))

print(f"search center : {center.tolist()}")
print(f"best position : {np.round(pos, 2).tolist()}  (cost {cost:.4f})")
print(f"step length   : {np.linalg.norm(pos - center):.2f} m (sensing range "
      f"is {params.sense_range} m)")
print(f"anchor link   : {np.linalg.norm(pos - anchor):.2f} m (comm range "
      f"is {params.comm_range} m)")
d_pylon = np.hypot(pos[0] - 640.0, pos[1] - 520.0)
print(f"pylon distance: {d_pylon:.2f} m (collision radius "
      f"{10.0 + params.size_d} m, margin ends at "
      f"{10.0 + params.size_d + params.safe_margin} m)")

print("\nconvergence (gbest cost every 10 iterations):")
for k in range(0, len(trace), 10):
    bar = "#" * int(40 * trace[k] / trace[0])
    print(f"  iter {k:3d}: {trace[k]:9.4f} {bar}")

# Cross-check: the swarm optimum should beat ten thousand random probes.
rng = np.random.default_rng(0)
u = rng.standard_normal((10_000, 3))
u /= np.linalg.norm(u, axis=1, keepdims=True)
probes = center + u * (params.sense_range * rng.random((10_000, 1)) ** (1 / 3))
best_probe = float(np.min(total_fitness_batch(probes, ctx, env)))
print(f"\nbest of 10,000 random probes: {best_probe:.4f} "
      f"(swarm found {cost:.4f})")

#!/usr/bin/env python3
"""Build a small 2.5D world and poke at it: elevation queries, obstacle
cross-sections, and the sensing query a UAV runs every tick.

Run from the repository root:

    python3 demos/01_terrain_and_obstacles.py
"""
import numpy as np

from uav_relay import (Environment, Obstacle, cross_section_at,
                       detect_obstacles, ground_height, random_terrain)

# A 1 km x 1 km rolling landscape around 120 m elevation, plus two towers.
terrain = random_terrain(rows=51, cols=51, cell_size=20.0,
                         base_height=120.0, amplitude=25.0, seed=7)
towers = (
    Obstacle(id="north_tower", center=(420.0, 650.0), radius=18.0,
             base_height=0.0, top_height=260.0),
    Obstacle(id="south_tower", center=(520.0, 380.0), radius=12.0,
             base_height=0.0, top_height=180.0),
)
env = Environment(terrain=terrain, obstacles=towers,
                  bounds=((0.0, 0.0, 0.0), (1000.0, 1000.0, 400.0)))

print("elevation samples (bilinear, continuous between grid nodes):")
for xy in [(0.0, 0.0), (250.0, 250.0), (505.5, 372.2), (999.0, 999.0)]:
    print(f"  ground at {xy}: {ground_height(env, xy):7.2f} m")

print("\nobstacle cross-sections by altitude:")
for z in (100.0, 200.0, 300.0):
    disks = cross_section_at(env, z)
    names = [f"r={r:.0f} at {c}" for c, r in disks]
    print(f"  z = {z:5.1f} m -> {len(disks)} disk(s) {names}")

# What a UAV hovering near the south tower actually senses (50 m radius).
p = np.array([560.0, 400.0, 150.0])
seen = detect_obstacles(env, p, sense_range=50.0)
print(f"\nUAV at {p.tolist()} senses: {[ob.id for ob in seen]}")

p_high = np.array([560.0, 400.0, 200.0])
seen_high = detect_obstacles(env, p_high, sense_range=50.0)
print(f"UAV at {p_high.tolist()} senses: {[ob.id for ob in seen_high]} "
      "(south tower tops out at 180 m)")

"""Composite search objective for candidate relay positions.

The total cost is a weighted sum of four terms:
  - obstacle clearance penalty (infinite inside the collision radius,
    linear ramp inside the safety margin),
  - angle between the candidate step and the bearing to the destination,
  - deviation of the step length from the sensing range,
  - deviation of the anchor link from the communication range,
plus hard infinite penalties for leaving the world bounds or dipping below
the minimum terrain clearance. Infinity is plain math.inf; it compares
greater than every finite cost so optimizer ranking stays total.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import Environment, Obstacle, OutOfTerrainError, ground_height_batch
from .vehicle import UavParams

INFEASIBLE = math.inf


@dataclass(frozen=True)
class FitnessWeights:
    b1: float = 1.0  # obstacle clearance
    b2: float = 1.0  # target angle
    b3: float = 1.0  # sensing-link length
    b4: float = 1.0  # communication-link length

    def __post_init__(self):
        ws = (self.b1, self.b2, self.b3, self.b4)
        if any(w < 0 for w in ws):
            raise ValueError("weights must be nonnegative")
        if not any(w > 0 for w in ws):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class FitnessContext:
    """Everything a single position search needs, frozen for its duration."""

    current: np.ndarray        # search center P_i
    previous_node: np.ndarray  # anchor node the link is measured from
    target: np.ndarray         # destination E
    obstacles: tuple[Obstacle, ...]
    params: UavParams
    weights: FitnessWeights = field(default_factory=FitnessWeights)

    def __post_init__(self):
        for name in ("current", "previous_node", "target"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, v)
            v.flags.writeable = False
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if np.array_equal(self.current, self.target):
            raise ValueError("current and target must differ")


def f1_obstacle(candidate, disks, params: UavParams) -> float:
    """Sum of per-disk penalties: 0 beyond the safety margin, a linear ramp
    inside it, infinity at or inside the collision radius."""
    candidate = np.asarray(candidate, dtype=float)
    total = 0.0
    for (cx, cy), radius in disks:
        d = math.hypot(candidate[0] - cx, candidate[1] - cy)
        collide = radius + params.size_d
        clear = collide + params.safe_margin
        if d <= collide:
            return INFEASIBLE
        if d <= clear:
            total += clear - d
    return total


def f2_target_angle(current, candidate, target) -> float:
    """Angle in [0, pi] between the step (current -> candidate) and the
    bearing (current -> target)."""
    current = np.asarray(current, dtype=float)
    v_step = np.asarray(candidate, dtype=float) - current
    v_los = np.asarray(target, dtype=float) - current
    if not np.any(v_step) or not np.any(v_los):
        raise ValueError("target angle undefined for zero-length vectors")
    return math.atan2(float(np.linalg.norm(np.cross(v_step, v_los))),
                      float(np.dot(v_step, v_los)))


def f3_sensing(current, candidate, sense_range: float) -> float:
    """Distance of the step length from the sensing range; infinite beyond it."""
    r = float(np.linalg.norm(np.asarray(candidate, dtype=float)
                             - np.asarray(current, dtype=float)))
    return abs(sense_range - r) if r <= sense_range else INFEASIBLE


def f4_communication(previous_node, candidate, comm_range: float) -> float:
    """Distance of the anchor link from the communication range; infinite
    once the link would break."""
    c = float(np.linalg.norm(np.asarray(candidate, dtype=float)
                             - np.asarray(previous_node, dtype=float)))
    return abs(comm_range - c) if c <= comm_range else INFEASIBLE


def total_fitness(candidate, ctx: FitnessContext, env: Environment) -> float:
    """Weighted sum of the four terms plus the hard bounds/clearance constraint."""
    candidate = np.asarray(candidate, dtype=float)
    if np.array_equal(candidate, ctx.current):
        raise ValueError("target angle undefined for zero-length vectors")
    return float(total_fitness_batch(candidate[None, :], ctx, env)[0])


def total_fitness_batch(candidates: np.ndarray, ctx: FitnessContext,
                        env: Environment) -> np.ndarray:
    """Vectorized total_fitness over an (N, 3) array of candidates.

    Degenerate candidates coinciding with the search center score infinite
    (the scalar path treats them as a domain error instead)."""
    candidates = np.asarray(candidates, dtype=float)
    n = candidates.shape[0]
    w = ctx.weights
    p = ctx.params
    cost = np.zeros(n)

    feasible = env.contains_batch(candidates)
    inside = candidates[feasible]
    if inside.shape[0]:
        try:
            ground = ground_height_batch(env, inside[:, :2])
        except OutOfTerrainError:
            # bounds wider than the heightmap: fall back per-point
            ground = np.empty(inside.shape[0])
            for k, pt in enumerate(inside):
                try:
                    ground[k] = ground_height_batch(env, pt[None, :2])[0]
                except OutOfTerrainError:
                    ground[k] = math.inf
        ok = inside[:, 2] >= ground + p.altitude_min
        idx = np.flatnonzero(feasible)
        feasible[idx[~ok]] = False
    cost[~feasible] = INFEASIBLE

    # F1: obstacle penalties, per obstacle band containing the candidate altitude
    if w.b1 > 0:
        for ob in ctx.obstacles:
            in_band = (candidates[:, 2] >= ob.base_height) & \
                      (candidates[:, 2] <= ob.top_height)
            if not np.any(in_band):
                continue
            d = np.hypot(candidates[:, 0] - ob.center[0],
                         candidates[:, 1] - ob.center[1])
            collide = ob.radius + p.size_d
            clear = collide + p.safe_margin
            cost[in_band & (d <= collide)] = INFEASIBLE
            ramp = in_band & (d > collide) & (d <= clear)
            cost[ramp] += w.b1 * (clear - d[ramp])

    # F2: target angle
    v_step = candidates - ctx.current
    step_norm = np.linalg.norm(v_step, axis=1)
    degenerate = step_norm == 0.0
    cost[degenerate] = INFEASIBLE
    if w.b2 > 0:
        v_los = ctx.target - ctx.current
        crossn = np.linalg.norm(np.cross(v_step, v_los), axis=1)
        dots = v_step @ v_los
        angles = np.arctan2(crossn, dots)
        cost[~degenerate] += w.b2 * angles[~degenerate]

    # F3: step length vs sensing range
    over_rs = step_norm > p.sense_range
    cost[over_rs] = INFEASIBLE
    if w.b3 > 0:
        cost[~over_rs] += w.b3 * np.abs(p.sense_range - step_norm[~over_rs])

    # F4: anchor link vs communication range
    c_link = np.linalg.norm(candidates - ctx.previous_node, axis=1)
    over_rc = c_link > p.comm_range
    cost[over_rc] = INFEASIBLE
    if w.b4 > 0:
        cost[~over_rc] += w.b4 * np.abs(p.comm_range - c_link[~over_rc])

    return cost

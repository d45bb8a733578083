"""Particle swarm search for relay positions, confined to the sensing ball.

search_optimal runs a full swarm over the closed ball of sensing radius
around the search center; explore_to_boundary chains those searches outward
until the link back to the anchor node would break or the destination comes
into sensing range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import Environment
from .fitness import FitnessContext, FitnessWeights, total_fitness_batch
from .vehicle import UavParams


class SearchInfeasibleError(RuntimeError):
    """Every initialization attempt produced only infeasible particles;
    the region around the search center is blocked."""


@dataclass(frozen=True)
class PsoConfig:
    population: int = 100
    iter_max: int = 100
    inertia: float = 1.0
    inertia_damping: float = 0.98
    c1: float = 1.5
    c2: float = 1.5
    seed: int = 0
    # Per-iteration velocity cap as a fraction of the sensing radius; the
    # update rule is otherwise unbounded on flat cost regions.
    velocity_max_frac: float = 0.2
    init_retries: int = 10
    boundary_margin: float = 0.0
    # Minimum outward gain per leg before the explore loop stops.
    progress_epsilon: float = 0.5

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.iter_max < 1:
            raise ValueError("iter_max must be at least 1")
        if min(self.inertia, self.c1, self.c2) < 0:
            raise ValueError("inertia, c1, c2 must be nonnegative")


@dataclass
class Swarm:
    center: np.ndarray
    radius: float
    positions: np.ndarray        # (N, 3)
    velocities: np.ndarray       # (N, 3)
    pbest_positions: np.ndarray  # (N, 3)
    pbest_costs: np.ndarray      # (N,)
    gbest_position: np.ndarray   # (3,)
    gbest_cost: float
    rng: np.random.Generator


def _sample_ball(rng: np.random.Generator, center: np.ndarray, radius: float,
                 n: int, env: Environment) -> np.ndarray:
    """Uniform samples in the closed ball, rejection-resampled against the
    world bounds (with a final clip so the loop always terminates)."""
    pts = np.empty((n, 3))
    pending = np.arange(n)
    for _ in range(20):
        if pending.size == 0:
            break
        u = rng.standard_normal((pending.size, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = radius * rng.random(pending.size) ** (1.0 / 3.0)
        pts[pending] = center + u * r[:, None]
        pending = pending[~env.contains_batch(pts[pending])]
    if pending.size:
        lo, hi = np.asarray(env.bounds[0]), np.asarray(env.bounds[1])
        pts[pending] = np.clip(pts[pending], lo, hi)
        pts[pending] = _clamp_to_ball(pts[pending], center, radius)
    return pts


def _clamp_to_ball(pts: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d = np.linalg.norm(pts - center, axis=1)
    over = d > radius
    if np.any(over):
        pts = pts.copy()
        pts[over] = center + (pts[over] - center) * (radius / d[over])[:, None]
    return pts


def init_swarm(center, ctx: FitnessContext, env: Environment, cfg: PsoConfig,
               rng: np.random.Generator | None = None) -> Swarm:
    """Sample the population in the sensing ball with zero velocities.
    Fully infeasible populations are resampled a bounded number of times."""
    center = np.asarray(center, dtype=float)
    radius = ctx.params.sense_range
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.init_retries + 1):
        positions = _sample_ball(rng, center, radius, cfg.population, env)
        costs = total_fitness_batch(positions, ctx, env)
        if np.any(np.isfinite(costs)):
            best = int(np.argmin(costs))
            return Swarm(center=center, radius=radius,
                         positions=positions,
                         velocities=np.zeros_like(positions),
                         pbest_positions=positions.copy(),
                         pbest_costs=costs.copy(),
                         gbest_position=positions[best].copy(),
                         gbest_cost=float(costs[best]),
                         rng=rng)
    raise SearchInfeasibleError(
        f"no feasible candidate within {radius} m of {center.tolist()} "
        f"after {cfg.init_retries + 1} resamples")


def pso_step(swarm: Swarm, ctx: FitnessContext, env: Environment,
             cfg: PsoConfig, iteration: int) -> Swarm:
    """One velocity/position update with damped inertia, followed by
    strict-improvement pbest/gbest updates (index-ordered tie-breaks)."""
    n = swarm.positions.shape[0]
    w_t = cfg.inertia * cfg.inertia_damping ** iteration
    r1 = swarm.rng.random((n, 1))
    r2 = swarm.rng.random((n, 1))
    v = (w_t * swarm.velocities
         + cfg.c1 * r1 * (swarm.pbest_positions - swarm.positions)
         + cfg.c2 * r2 * (swarm.gbest_position - swarm.positions))
    v_max = cfg.velocity_max_frac * swarm.radius
    speed = np.linalg.norm(v, axis=1)
    fast = speed > v_max
    if np.any(fast):
        v[fast] *= (v_max / speed[fast])[:, None]
    x = swarm.positions + v
    lo, hi = np.asarray(env.bounds[0]), np.asarray(env.bounds[1])
    x = np.clip(x, lo, hi)
    x = _clamp_to_ball(x, swarm.center, swarm.radius)

    costs = total_fitness_batch(x, ctx, env)
    swarm.positions = x
    swarm.velocities = v
    improved = costs < swarm.pbest_costs
    swarm.pbest_positions[improved] = x[improved]
    swarm.pbest_costs[improved] = costs[improved]
    best = int(np.argmin(swarm.pbest_costs))
    if swarm.pbest_costs[best] < swarm.gbest_cost:
        swarm.gbest_cost = float(swarm.pbest_costs[best])
        swarm.gbest_position = swarm.pbest_positions[best].copy()
    return swarm


def search_optimal(center, ctx: FitnessContext, env: Environment,
                   cfg: PsoConfig, rng: np.random.Generator | None = None,
                   ) -> tuple[np.ndarray, float, np.ndarray]:
    """Full PSO run; returns (best position, its cost, per-iteration gbest
    trace of length iter_max). The trace is monotonically non-increasing."""
    swarm = init_swarm(center, ctx, env, cfg, rng)
    trace = np.empty(cfg.iter_max)
    for k in range(cfg.iter_max):
        pso_step(swarm, ctx, env, cfg, k)
        trace[k] = swarm.gbest_cost
    return swarm.gbest_position.copy(), swarm.gbest_cost, trace


@dataclass
class ExploreResult:
    final_position: np.ndarray
    intermediate_points: list[np.ndarray]
    destination_reached: bool = False
    complete: bool = True
    traces: list[np.ndarray] = field(default_factory=list)


def boundary_reached(anchor: np.ndarray, current: np.ndarray,
                     sense_range: float, comm_range: float,
                     cfg: PsoConfig) -> bool:
    """The explore loop stops once a full sensing-range step outward would
    break the anchor link: the next optimum (step length ~ sense_range) would
    land beyond the communication range. Searching past this point only finds
    sideways moves along the communication sphere."""
    c = float(np.linalg.norm(current - anchor))
    return c + sense_range > comm_range - cfg.boundary_margin


def _leg_accepts(anchor: np.ndarray, current: np.ndarray, candidate: np.ndarray,
                 comm_range: float, cfg: PsoConfig) -> bool:
    """Reject candidates that would break the anchor link or that no longer
    make outward progress (without the progress guard the loop could creep
    along the communication sphere forever)."""
    c_cand = float(np.linalg.norm(candidate - anchor))
    if c_cand > comm_range - cfg.boundary_margin:
        return False
    c_cur = float(np.linalg.norm(current - anchor))
    return c_cand > c_cur + cfg.progress_epsilon


def explore_to_boundary(anchor, start, target, env: Environment,
                        params: UavParams, cfg: PsoConfig,
                        weights: FitnessWeights | None = None,
                        ) -> ExploreResult:
    """Chain position searches from start until the communication boundary
    of the anchor node, or until the destination enters sensing range.

    Each leg gets its own RNG stream derived from (cfg.seed, leg index), so
    results are reproducible regardless of call context.
    """
    from .environment import detect_obstacles  # local to avoid cycle at import

    anchor = np.asarray(anchor, dtype=float)
    current = np.asarray(start, dtype=float)
    target = np.asarray(target, dtype=float)
    if np.linalg.norm(current - anchor) > params.comm_range:
        raise ValueError("start already outside the anchor's communication range")
    weights = weights or FitnessWeights()

    result = ExploreResult(final_position=current, intermediate_points=[])
    max_legs = 4 * math.ceil(params.comm_range / params.sense_range) + 4
    for leg in range(max_legs):
        if np.linalg.norm(target - current) <= params.sense_range and \
                np.linalg.norm(target - anchor) <= params.comm_range:
            result.final_position = target.copy()
            result.destination_reached = True
            return result
        if boundary_reached(anchor, current, params.sense_range,
                            params.comm_range, cfg):
            result.final_position = current.copy()
            return result
        ctx = FitnessContext(
            current=current, previous_node=anchor, target=target,
            obstacles=tuple(detect_obstacles(env, current, params.sense_range)),
            params=params, weights=weights)
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, leg]))
        try:
            candidate, _cost, trace = search_optimal(current, ctx, env, cfg, rng)
        except SearchInfeasibleError:
            result.complete = False
            return result
        result.traces.append(trace)
        if not _leg_accepts(anchor, current, candidate, params.comm_range, cfg):
            result.final_position = current.copy()
            return result
        result.intermediate_points.append(candidate.copy())
        current = candidate
        result.final_position = current.copy()
    return result

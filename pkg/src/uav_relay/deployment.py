"""Sequential relay deployment: per-UAV state machine and the lockstep loop.

Each UAV walks Unassigned -> Assigned -> Explore -> Occupied, never backward.
Exactly one UAV is Assigned or Explore at any time; the rest idle at the base
or hover at their final node. The world advances in fixed ticks: every
controller reads a frozen snapshot of all states, then all updates commit in
UAV-id order, followed by two safety projections (terrain clearance floor and
obstacle collision radius) that keep the hard constraints exact even where
the reactive controller alone would graze them.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .behavior import BehaviorGains, BehaviorInputs, compose_velocity
from .environment import Environment, detect_obstacles, ground_height
from .fitness import FitnessContext, FitnessWeights
from .pso import (PsoConfig, SearchInfeasibleError, _leg_accepts,
                  boundary_reached, search_optimal)
from .vehicle import UavParams, UavState, step

# Extra horizontal clearance (m) added outside the collision radius by the
# commit-time obstacle guard.
COLLISION_GUARD = 0.5


# --- phases ------------------------------------------------------------------

@dataclass(frozen=True)
class Unassigned:
    name = "unassigned"


@dataclass(frozen=True)
class Assigned:
    route: tuple  # positions of established nodes to fly through, in order
    cursor: int = 0
    name = "assigned"


@dataclass(frozen=True)
class Explore:
    anchor: np.ndarray
    intermediates: tuple = ()
    target: Optional[np.ndarray] = None
    to_destination: bool = False
    name = "explore"


@dataclass(frozen=True)
class Occupied:
    final_position: np.ndarray
    is_destination_reach: bool = False
    dispatched: bool = False
    name = "occupied"


UavPhase = Union[Unassigned, Assigned, Explore, Occupied]

_PHASE_ORDER = {"unassigned": 0, "assigned": 1, "explore": 2, "occupied": 3}


@dataclass(frozen=True)
class Event:
    tick: int
    uav_id: str
    event: str
    payload: dict


@dataclass
class RouteGraph:
    base: np.ndarray
    uav_nodes: list  # (uav_id, position) in deployment order
    destination: np.ndarray
    destination_reached: bool = False

    @property
    def node_positions(self) -> list[np.ndarray]:
        return [self.base] + [p for _, p in self.uav_nodes]

    @property
    def links(self) -> list[float]:
        pos = self.node_positions
        return [float(np.linalg.norm(pos[k + 1] - pos[k]))
                for k in range(len(pos) - 1)]


@dataclass(frozen=True)
class SimClock:
    tick: int
    dt: float

    @property
    def elapsed(self) -> float:
        return self.tick * self.dt


@dataclass
class WorldSnapshot:
    """Frozen view of one tick handed to every controller."""

    clock: SimClock
    env: Environment
    params: UavParams
    gains: BehaviorGains
    weights: FitnessWeights
    destination: np.ndarray
    route_nodes: list            # established node positions, base first
    states: dict                 # uav_id -> UavState (all UAVs)
    next_in_turn: Optional[str]  # uav_id the pending dispatch addresses
    searcher: Callable           # (uav_id, center, anchor) -> (pos, cost)


def _behavior_inputs(state: UavState, target: np.ndarray,
                     snap: WorldSnapshot) -> BehaviorInputs:
    env, params = snap.env, snap.params
    nearest_obs = None
    best = math.inf
    for ob in detect_obstacles(env, state.position, params.sense_range):
        d_boundary = max(float(np.hypot(state.position[0] - ob.center[0],
                                        state.position[1] - ob.center[1]))
                         - ob.radius, 1e-6)
        if d_boundary < best:
            best = d_boundary
            nearest_obs = (ob.center, ob.radius, d_boundary)
    nearest_uav = None
    best = math.inf
    for other_id, other in snap.states.items():
        if other_id == state.id:
            continue
        d = float(np.linalg.norm(other.position - state.position))
        if d < best:
            best = d
            nearest_uav = (other.position, max(d, 1e-6))
    try:
        min_alt = ground_height(env, state.position[:2]) + params.altitude_min
    except Exception:
        min_alt = None
    return BehaviorInputs(self_state=state, target=target,
                          nearest_obstacle=nearest_obs,
                          nearest_uav=nearest_uav,
                          min_altitude=min_alt)


def node_arrival_radius(params: UavParams, gains: BehaviorGains) -> float:
    """Established nodes host a hovering UAV, so "reached" means entering the
    inter-UAV influence radius rather than touching the point itself."""
    return max(2.0 * params.size_d, gains.b_adr)


def tick_uav(phase: UavPhase, state: UavState, snap: WorldSnapshot,
             ) -> tuple[UavPhase, Optional[np.ndarray], list[tuple[str, dict]]]:
    """One controller tick. Returns the next phase, a velocity command
    (None = hover), and (event, payload) pairs to log."""
    params, gains = snap.params, snap.gains
    events: list[tuple[str, dict]] = []

    if isinstance(phase, Unassigned):
        if snap.next_in_turn == state.id:
            new = Assigned(route=tuple(np.asarray(p, dtype=float)
                                       for p in snap.route_nodes), cursor=0)
            events.append(("phase", {"from": "unassigned", "to": "assigned"}))
            return new, None, events
        return phase, None, events

    if isinstance(phase, Assigned):
        target = phase.route[phase.cursor]
        d = float(np.linalg.norm(target - state.position))
        if d <= node_arrival_radius(params, gains):
            if phase.cursor == len(phase.route) - 1:
                new = Explore(anchor=phase.route[-1])
                events.append(("phase", {"from": "assigned", "to": "explore"}))
                return new, None, events
            return replace(phase, cursor=phase.cursor + 1), None, events
        v = compose_velocity(_behavior_inputs(state, target, snap), gains, params)
        return phase, v, events

    if isinstance(phase, Explore):
        if phase.target is None:
            current = state.position
            dest = snap.destination
            if (np.linalg.norm(dest - current) <= params.sense_range
                    and np.linalg.norm(dest - phase.anchor) <= params.comm_range):
                events.append(("destination_detected",
                               {"distance": float(np.linalg.norm(dest - current))}))
                return replace(phase, target=dest.copy(),
                               to_destination=True), None, events
            # The first leg searches around the anchor node itself: the UAV
            # holds short of the hovering occupant, and a search ball centered
            # behind the anchor would reward stepping backward (distance from
            # the anchor is distance from the anchor, whatever the direction).
            center = phase.anchor if not phase.intermediates else current
            if boundary_reached(phase.anchor, center, params.sense_range,
                                params.comm_range, snap.searcher.cfg):
                new = Occupied(final_position=current.copy())
                events.append(("phase", {"from": "explore", "to": "occupied"}))
                events.append(("node_occupied", {
                    "position": [float(x) for x in current],
                    "link_length": float(np.linalg.norm(current - phase.anchor)),
                    "is_destination": False}))
                return new, None, events
            pos, cost = snap.searcher(state.id, center, phase.anchor)
            events.append(("search", {
                "search_index": len(phase.intermediates),
                "position": [float(x) for x in pos],
                "cost": float(cost)}))
            if _leg_accepts(phase.anchor, center, pos, params.comm_range,
                            snap.searcher.cfg):
                return replace(phase, target=pos,
                               intermediates=phase.intermediates + (pos,)), \
                    None, events
            new = Occupied(final_position=current.copy())
            events.append(("phase", {"from": "explore", "to": "occupied"}))
            events.append(("node_occupied", {
                "position": [float(x) for x in current],
                "link_length": float(np.linalg.norm(current - phase.anchor)),
                "is_destination": False}))
            return new, None, events
        d = float(np.linalg.norm(phase.target - state.position))
        if d <= params.size_d:
            if phase.to_destination:
                new = Occupied(final_position=state.position.copy(),
                               is_destination_reach=True)
                events.append(("phase", {"from": "explore", "to": "occupied"}))
                events.append(("node_occupied", {
                    "position": [float(x) for x in state.position],
                    "link_length": float(np.linalg.norm(state.position
                                                        - phase.anchor)),
                    "is_destination": True}))
                return new, None, events
            return replace(phase, target=None), None, events
        v = compose_velocity(_behavior_inputs(state, phase.target, snap),
                             gains, params)
        return phase, v, events

    # Occupied: hover; non-destination nodes broadcast one dispatch request.
    if not phase.is_destination_reach and not phase.dispatched:
        events.append(("dispatch", {
            "position": [float(x) for x in phase.final_position]}))
        return replace(phase, dispatched=True), None, events
    return phase, None, events


# --- run-level results -------------------------------------------------------

@dataclass
class Metrics:
    rows: list[dict]
    mean_link_length_excl_final: Optional[float]
    mean_deviation_from_ideal: Optional[float]

    def as_dict(self) -> dict:
        return {"per_uav": self.rows,
                "mean_link_length_excl_final_m": self.mean_link_length_excl_final,
                "mean_deviation_from_ideal_m": self.mean_deviation_from_ideal}


@dataclass
class RunResult:
    status: str  # "complete" | "failure" | "timeout"
    reason: str
    route: Optional[RouteGraph]
    metrics: Optional[Metrics]
    trajectories: list  # (tick, uav_id, x, y, z, psi, phase)
    events: list[Event]
    traces: list  # (uav_id, search_index, np.ndarray of gbest costs)
    search_times: dict  # uav_id -> [wall seconds per search]
    ticks: int
    uavs_deployed: int


def run_deployment(scenario, master_seed: Optional[int] = None) -> RunResult:
    """Execute one full deployment for a Scenario (see scenario_io)."""
    sim = Simulator(scenario, master_seed)
    return sim.run()


class Simulator:
    def __init__(self, scenario, master_seed: Optional[int] = None):
        from .scenario_io import build_environment  # avoid import cycle

        self.scenario = scenario
        self.master_seed = scenario.master_seed if master_seed is None \
            else int(master_seed)
        self.env = build_environment(scenario)
        self.params = scenario.uav
        self.gains = scenario.gains
        self.weights = scenario.weights
        self.pso_cfg = scenario.pso
        self.dt = scenario.dt
        self.base = np.asarray(scenario.base, dtype=float)
        self.destination = np.asarray(scenario.destination, dtype=float)
        self.tick_budget = scenario.tick_budget

        n = scenario.uav_budget
        self.ids = [f"uav{i + 1}" for i in range(n)]
        self.states: dict[str, UavState] = {}
        self.phases: dict[str, UavPhase] = {}
        heading = math.atan2(self.destination[1] - self.base[1],
                             self.destination[0] - self.base[0])
        back = self.base[:2] - self.destination[:2]
        back = back / np.linalg.norm(back)
        spacing = 10.0 * self.params.size_d
        for i, uid in enumerate(self.ids):
            xy = self.base[:2] + back * spacing * (i + 1)
            z = max(self.base[2],
                    ground_height(self.env, xy) + self.params.altitude_min)
            self.states[uid] = UavState(id=uid,
                                        position=np.array([xy[0], xy[1], z]),
                                        heading=heading,
                                        velocity=np.zeros(3))
            self.phases[uid] = Unassigned()

        self.route_nodes: list[np.ndarray] = [self.base.copy()]
        self.route = RouteGraph(base=self.base.copy(), uav_nodes=[],
                                destination=self.destination.copy())
        self.events: list[Event] = []
        self.trajectories: list = []
        self.traces: list = []
        self.search_times: dict[str, list[float]] = {u: [] for u in self.ids}
        self.search_counts: dict[str, int] = {u: 0 for u in self.ids}
        self.temp_goals: dict[str, int] = {u: 0 for u in self.ids}
        self.dispatch_ticks: dict[str, int] = {}
        self.occupied_ticks: dict[str, int] = {}
        self.tick = 0
        self.next_in_turn: Optional[str] = self.ids[0]
        self._log_event(0, "base", "dispatch",
                        {"position": [float(x) for x in self.base]})

    # -- helpers --------------------------------------------------------------

    def _log_event(self, tick: int, uav_id: str, event: str, payload: dict):
        self.events.append(Event(tick=tick, uav_id=uav_id, event=event,
                                 payload=payload))

    def _log_trajectories(self):
        for uid in self.ids:
            s = self.states[uid]
            self.trajectories.append((self.tick, uid,
                                      float(s.position[0]), float(s.position[1]),
                                      float(s.position[2]), float(s.heading),
                                      self.phases[uid].name))

    def _make_searcher(self):
        sim = self

        def searcher(uav_id: str, center: np.ndarray, anchor: np.ndarray):
            k = sim.search_counts[uav_id]
            sim.search_counts[uav_id] += 1
            uav_index = sim.ids.index(uav_id)
            rng = np.random.default_rng(np.random.SeedSequence(
                [sim.master_seed, uav_index, k]))
            ctx = FitnessContext(
                current=center, previous_node=anchor,
                target=sim.destination,
                obstacles=tuple(detect_obstacles(sim.env, center,
                                                 sim.params.sense_range)),
                params=sim.params, weights=sim.weights)
            t0 = time.perf_counter()
            pos, cost, trace = search_optimal(center, ctx, sim.env,
                                              sim.pso_cfg, rng)
            sim.search_times[uav_id].append(time.perf_counter() - t0)
            sim.traces.append((uav_id, k, trace))
            return pos, cost

        searcher.cfg = self.pso_cfg
        return searcher

    def _safety_project(self, state: UavState) -> UavState:
        """Commit-time guards: terrain clearance floor and obstacle
        collision-radius pushout."""
        p = state.position.copy()
        changed = False
        try:
            floor = ground_height(self.env, p[:2]) + self.params.altitude_min
            if p[2] < floor:
                p[2] = floor
                changed = True
        except Exception:
            pass
        for ob in self.env.obstacles:
            if not ob.spans(p[2]):
                continue
            dx, dy = p[0] - ob.center[0], p[1] - ob.center[1]
            d = math.hypot(dx, dy)
            limit = ob.radius + self.params.size_d + COLLISION_GUARD
            if d < limit:
                if d < 1e-9:
                    dx, dy, d = 1.0, 0.0, 1.0
                p[0] = ob.center[0] + dx / d * limit
                p[1] = ob.center[1] + dy / d * limit
                changed = True
        if not changed:
            return state
        return UavState(id=state.id, position=p, heading=state.heading,
                        velocity=state.velocity)

    # -- main loop -------------------------------------------------------------

    def run(self) -> RunResult:
        searcher = self._make_searcher()
        self._log_trajectories()
        status, reason = "timeout", "tick budget exhausted"
        while self.tick < self.tick_budget:
            self.tick += 1
            snap = WorldSnapshot(
                clock=SimClock(tick=self.tick, dt=self.dt),
                env=self.env, params=self.params, gains=self.gains,
                weights=self.weights, destination=self.destination,
                route_nodes=list(self.route_nodes),
                states=dict(self.states),
                next_in_turn=self.next_in_turn,
                searcher=searcher)
            outcome = self._step(snap)
            self._log_trajectories()
            if outcome is not None:
                status, reason = outcome
                break

        route = self.route
        route.destination_reached = status == "complete"
        metrics = compute_metrics(route, self.trajectories, self.events,
                                  env=self.env, params=self.params,
                                  dt=self.dt,
                                  dispatch_ticks=self.dispatch_ticks,
                                  occupied_ticks=self.occupied_ticks,
                                  intermediate_counts=dict(self.temp_goals),
                                  search_times=self.search_times)
        return RunResult(status=status, reason=reason, route=route,
                         metrics=metrics, trajectories=self.trajectories,
                         events=self.events, traces=self.traces,
                         search_times=self.search_times, ticks=self.tick,
                         uavs_deployed=len(route.uav_nodes))

    def _step(self, snap: WorldSnapshot) -> Optional[tuple[str, str]]:
        commands: dict[str, Optional[np.ndarray]] = {}
        finished: Optional[tuple[str, str]] = None
        for uid in self.ids:
            phase = self.phases[uid]
            try:
                new_phase, vcmd, events = tick_uav(phase, self.states[uid], snap)
            except SearchInfeasibleError as exc:
                self._log_event(self.tick, uid, "failure",
                                {"reason": str(exc)})
                return ("failure", f"search infeasible for {uid}: {exc}")
            for name, payload in events:
                self._log_event(self.tick, uid, name, payload)
                if name == "phase" and payload["to"] == "assigned":
                    self.dispatch_ticks[uid] = self.tick
                    self.next_in_turn = None
                if name == "node_occupied":
                    self.occupied_ticks[uid] = self.tick
                    if isinstance(phase, Explore):
                        self.temp_goals[uid] = len(phase.intermediates)
                    pos = np.asarray(payload["position"], dtype=float)
                    self.route.uav_nodes.append((uid, pos))
                    if payload["is_destination"]:
                        self._log_event(self.tick, uid, "route_complete", {})
                        finished = ("complete", "destination reached")
                    else:
                        self.route_nodes.append(pos)
                if name == "dispatch":
                    nxt = next((u for u in self.ids
                                if isinstance(self.phases[u], Unassigned)
                                and u != uid), None)
                    if nxt is None:
                        self._log_event(self.tick, uid, "failure",
                                        {"reason": "uav budget exhausted"})
                        finished = ("failure", "uav budget exhausted")
                    else:
                        self.next_in_turn = nxt
            if _PHASE_ORDER[new_phase.name] < _PHASE_ORDER[phase.name]:
                raise AssertionError(f"backward phase transition for {uid}")
            self.phases[uid] = new_phase
            commands[uid] = vcmd
        for uid in self.ids:
            vcmd = commands[uid]
            if vcmd is None:
                continue
            self.states[uid] = self._safety_project(
                step(self.states[uid], vcmd, self.dt))
        return finished


def compute_metrics(route: RouteGraph, trajectories, events, *,
                    env: Environment, params: UavParams, dt: float,
                    dispatch_ticks=None, occupied_ticks=None,
                    intermediate_counts=None, search_times=None) -> Metrics:
    """Per-UAV comparison against the ideal straight-line reference: nodes
    evenly spaced one communication range apart along the base-destination
    line, flown at minimum clearance over the terrain below."""
    dispatch_ticks = dispatch_ticks or {}
    occupied_ticks = occupied_ticks or {}
    search_events: dict[str, int] = {}
    for ev in events:
        if ev.event == "search":
            search_events[ev.uav_id] = search_events.get(ev.uav_id, 0) + 1
    if intermediate_counts is None:
        intermediate_counts = search_events

    base = route.base
    dest = route.destination
    span = float(np.linalg.norm(dest[:2] - base[:2]))
    if span == 0 or not route.uav_nodes:
        return Metrics(rows=[], mean_link_length_excl_final=None,
                       mean_deviation_from_ideal=None)
    los_unit = (dest[:2] - base[:2]) / span

    # ideal chain: node i at i * comm_range along the line (clamped to the
    # destination), at minimum clearance over the terrain below
    ideals = [base]
    for i in range(1, len(route.uav_nodes) + 1):
        along = min(i * params.comm_range, span)
        xy = base[:2] + los_unit * along
        try:
            z = ground_height(env, xy) + params.altitude_min
        except Exception:
            z = float(base[2])
        ideals.append(np.array([xy[0], xy[1], z]))

    rows = []
    prev = base
    deviations = []
    for i, (uid, pos) in enumerate(route.uav_nodes, start=1):
        ideal = ideals[i]
        link = float(np.linalg.norm(pos - prev))
        actual_angle = _target_angle(prev, pos, dest)
        ideal_angle = _target_angle(ideals[i - 1], ideal, dest)
        deviation = float(np.linalg.norm(pos - ideal))
        deviations.append(deviation)
        row = {
            "uav_id": uid,
            "ideal_position": [round(float(x), 4) for x in ideal],
            "actual_position": [round(float(x), 4) for x in pos],
            "ideal_target_angle_rad": round(ideal_angle, 6),
            "actual_target_angle_rad": round(actual_angle, 6),
            "deployment_time_s": round(
                (occupied_ticks.get(uid, 0) - dispatch_ticks.get(uid, 0)) * dt, 3),
            "link_length_m": round(link, 4),
            "temporary_goal_number": int(intermediate_counts.get(uid, 0)),
            "deviation_from_ideal_m": round(deviation, 4),
        }
        if search_times is not None:
            row["searching_time_s"] = round(sum(search_times.get(uid, [])), 4)
        rows.append(row)
        prev = pos

    links = route.links
    mean_link = float(np.mean(links[:-1])) if len(links) > 1 else None
    return Metrics(rows=rows,
                   mean_link_length_excl_final=mean_link,
                   mean_deviation_from_ideal=float(np.mean(deviations)))


def _target_angle(origin: np.ndarray, point: np.ndarray,
                  dest: np.ndarray) -> float:
    v_step = point - origin
    v_los = dest - origin
    ns, nl = np.linalg.norm(v_step), np.linalg.norm(v_los)
    if ns == 0 or nl == 0:
        return 0.0
    return float(math.atan2(float(np.linalg.norm(np.cross(v_step, v_los))),
                            float(np.dot(v_step, v_los))))

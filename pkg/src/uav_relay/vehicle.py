"""UAV particle model: parameters, state, and the discrete-time kinematic step."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UavParams:
    """Physical and radio parameters shared by all UAVs in a run.

    Defaults follow the reference setup: 1 m body, 10 m safety margin,
    300 m communication range, 50 m sensing range, 15 m/s flight speed.
    """

    size_d: float = 1.0
    safe_margin: float = 10.0
    comm_range: float = 300.0
    sense_range: float = 50.0
    max_speed: float = 15.0
    altitude_min: float = 2.0

    def __post_init__(self):
        if not (0 < self.sense_range < self.comm_range):
            raise ValueError("need 0 < sense_range < comm_range")
        if self.size_d <= 0 or self.safe_margin <= 0 or self.max_speed <= 0:
            raise ValueError("size_d, safe_margin, and max_speed must be positive")
        if self.altitude_min < 0:
            raise ValueError("altitude_min must be nonnegative")


@dataclass(frozen=True)
class UavState:
    """Plain-value kinematic state; all updates return new instances."""

    id: str
    position: np.ndarray   # (3,)
    heading: float         # rad, in (-pi, pi]
    velocity: np.ndarray   # (3,)

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        v = np.asarray(self.velocity, dtype=float)
        if p.shape != (3,) or v.shape != (3,):
            raise ValueError("position and velocity must be 3-vectors")
        if not (-math.pi < self.heading <= math.pi):
            raise ValueError("heading must lie in (-pi, pi]")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)
        p.flags.writeable = False
        v.flags.writeable = False


def step(state: UavState, v_cmd, dt: float) -> UavState:
    """Advance one tick: position integrates v_cmd, heading follows the
    horizontal velocity direction (held when the horizontal component is zero,
    since atan2(0, 0) is undefined)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = np.asarray(v_cmd, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError("v_cmd must be a finite 3-vector")
    if v[0] == 0.0 and v[1] == 0.0:
        heading = state.heading
    else:
        heading = math.atan2(v[1], v[0])
        if heading == -math.pi:
            heading = math.pi
    return UavState(id=state.id, position=state.position + v * dt,
                    heading=heading, velocity=v.copy())


def clamp_speed(v, max_speed: float) -> np.ndarray:
    """Scale v down to max_speed if it is faster; direction is preserved."""
    if not max_speed > 0:
        raise ValueError("max_speed must be positive")
    v = np.asarray(v, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed <= max_speed:
        return v.copy()
    return v * (max_speed / speed)

"""Reactive flight controller: weighted sum of three sub-behaviors.

The commanded velocity is

    V = f_m2g * V_m2g + f_ath * V_ath + f_adr * V_adr

with attraction toward the current waypoint, a 90-degree sideways deflection
around the nearest obstacle, and radial repulsion from the nearest UAV. Two
artifact-level additions keep the hard safety constraints satisfiable:

  - a vertical correction when the UAV sinks below its minimum terrain
    clearance (obstacle avoidance is purely horizontal);
  - an emergency no-closing rule very near another UAV, because the printed
    gain forms alone let two head-on UAVs approach asymptotically close.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .vehicle import UavParams, UavState, clamp_speed

# Multiple of size_d below which closing velocity toward another UAV is cut.
EMERGENCY_SEPARATION_FACTOR = 6.0


@dataclass(frozen=True)
class BehaviorGains:
    """Gain/rolloff pairs for the three sub-behaviors. Defaults follow the
    reference tuning (30/20, 30/15, 30/20)."""

    a_m2g: float = 30.0
    b_m2g: float = 20.0
    a_ath: float = 30.0
    b_ath: float = 15.0
    a_adr: float = 30.0
    b_adr: float = 20.0

    def __post_init__(self):
        for name in ("a_m2g", "b_m2g", "a_ath", "b_ath", "a_adr", "b_adr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class BehaviorInputs:
    """One tick's controller inputs.

    nearest_obstacle: (center_xy, radius, boundary_distance) of the closest
    detected obstacle at the UAV's altitude, or None.
    nearest_uav: (position, distance) of the closest other UAV, or None.
    min_altitude: terrain height plus required clearance under the UAV, or
    None to skip the altitude correction.
    """

    self_state: UavState
    target: np.ndarray
    nearest_obstacle: Optional[tuple[tuple[float, float], float, float]] = None
    nearest_uav: Optional[tuple[np.ndarray, float]] = None
    min_altitude: Optional[float] = None


def v_move_to_target(state: UavState, target) -> tuple[np.ndarray, float]:
    """Unit vector toward the waypoint and the distance to it. Coincident
    points return a zero vector with distance 0 (treated as arrived)."""
    delta = np.asarray(target, dtype=float) - state.position
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        return np.zeros(3), 0.0
    return delta / d, d


def gain_m2g(d_m2g: float, gains: BehaviorGains) -> float:
    """Constant attraction far out, linear ramp to zero at the waypoint."""
    if d_m2g >= gains.b_m2g:
        return gains.a_m2g
    return gains.a_m2g * d_m2g / gains.b_m2g


def v_avoid_obstacle(state: UavState, obstacle, d_ath: float) -> np.ndarray:
    """Bearing-to-obstacle vector rotated +/-90 degrees about z, the side
    picked so the UAV steers around rather than into the obstacle. Output is
    horizontal; altitude is handled separately."""
    if not d_ath > 0:
        raise ValueError("d_ath must be positive (zero means already colliding)")
    x_th, y_th = obstacle[0], obstacle[1]
    # Normalizing by the boundary distance (not the center distance) makes
    # the deflection grow as the gap closes, tightening the turn just before
    # contact where the linear gain alone is too weak.
    dx = (x_th - state.position[0]) / d_ath
    dy = (y_th - state.position[1]) / d_ath
    rho = dx * math.sin(state.heading) - dy * math.cos(state.heading)
    # sgn(0) would cancel avoidance with the obstacle dead ahead; pick a side.
    sign = 1.0 if rho >= 0 else -1.0
    # Clockwise-positive rotation: an obstacle bearing slightly right of the
    # heading (rho > 0) deflects the UAV left, away from the obstacle side.
    # The opposite sign steers into the obstacle and zigzags head-on.
    theta = 0.5 * math.pi * sign
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * dx - s * dy, s * dx + c * dy, 0.0])


def gain_ath(d_ath: float, gains: BehaviorGains) -> float:
    """Zero outside the influence radius, ramping to full gain at contact."""
    if d_ath >= gains.b_ath:
        return 0.0
    return gains.a_ath * (1.0 - d_ath / gains.b_ath)


def v_avoid_uav(state: UavState, other, d_adr: float) -> np.ndarray:
    """Unit vector pointing away from the other UAV."""
    if not d_adr > 0:
        raise ValueError("d_adr must be positive (zero means already colliding)")
    return (state.position - np.asarray(other, dtype=float)) / d_adr


def gain_adr(d_adr: float, gains: BehaviorGains) -> float:
    """Zero outside the influence radius, ramping to full gain at contact."""
    if d_adr >= gains.b_adr:
        return 0.0
    return gains.a_adr * (1.0 - d_adr / gains.b_adr)


def compose_velocity(inputs: BehaviorInputs, gains: BehaviorGains,
                     params: UavParams) -> np.ndarray:
    """Combine the active sub-behaviors into one clamped velocity command."""
    state = inputs.self_state
    u, d_m2g = v_move_to_target(state, inputs.target)
    v = gain_m2g(d_m2g, gains) * u

    if inputs.nearest_obstacle is not None:
        (cx, cy), _radius, d_ath = inputs.nearest_obstacle
        g = gain_ath(d_ath, gains)
        if g > 0.0:
            va = v_avoid_obstacle(state, (cx, cy), d_ath)
            # With the obstacle beside the path the +/-90 rotation lies along
            # the path axis, and the heading-picked side can point straight
            # back along the approach; attraction and avoidance then balance
            # into a zero-velocity equilibrium short of the goal. Flip to the
            # other side only in that near-anti-parallel geometry: flipping on
            # any negative dot would disturb ordinary head-on avoidance, where
            # the deflection is roughly perpendicular to the approach.
            cos_to_target = float(np.dot(va, u)) / float(np.linalg.norm(va))
            if d_m2g > 0.0 and cos_to_target < -0.9:
                va = -va
            v = v + g * va

    if inputs.nearest_uav is not None:
        other, d_adr = inputs.nearest_uav
        g = gain_adr(d_adr, gains)
        if g > 0.0:
            v = v + g * v_avoid_uav(state, other, d_adr)

    if inputs.min_altitude is not None:
        deficit = inputs.min_altitude - state.position[2]
        if deficit > 0.0:
            v[2] += (gains.a_m2g / gains.b_m2g) * deficit

    if inputs.nearest_uav is not None:
        other, d_adr = inputs.nearest_uav
        if d_adr < EMERGENCY_SEPARATION_FACTOR * params.size_d:
            toward = (np.asarray(other, dtype=float) - state.position) / d_adr
            closing = float(np.dot(v, toward))
            if closing > 0.0:
                v = v - closing * toward

    return clamp_speed(v, params.max_speed)

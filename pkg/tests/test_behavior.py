import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uav_relay.behavior import (EMERGENCY_SEPARATION_FACTOR, BehaviorGains,
                                BehaviorInputs, compose_velocity, gain_adr,
                                gain_ath, gain_m2g, v_avoid_obstacle,
                                v_avoid_uav, v_move_to_target)
from uav_relay.vehicle import UavParams, UavState, step


def make_state(position=(0.0, 0.0, 0.0), heading=0.0, velocity=(0.0, 0.0, 0.0)):
    return UavState(id="u", position=np.array(position, dtype=float),
                    heading=heading, velocity=np.array(velocity, dtype=float))


GAINS = BehaviorGains()
PARAMS = UavParams()


class TestMoveToTarget:
    def test_axis_aligned(self):
        u, d = v_move_to_target(make_state(), (10.0, 0.0, 0.0))
        np.testing.assert_allclose(u, [1.0, 0.0, 0.0])
        assert d == 10.0

    def test_345_triangle(self):
        u, d = v_move_to_target(make_state(), (3.0, 4.0, 0.0))
        np.testing.assert_allclose(u, [0.6, 0.8, 0.0])
        assert d == 5.0

    def test_arrival_degenerate(self):
        u, d = v_move_to_target(make_state(), (0.0, 0.0, 0.0))
        np.testing.assert_array_equal(u, [0.0, 0.0, 0.0])
        assert d == 0.0


class TestGains:
    def test_m2g_far_branch(self):
        assert gain_m2g(100.0, GAINS) == 30.0

    def test_m2g_ramp(self):
        assert gain_m2g(10.0, GAINS) == pytest.approx(15.0)

    def test_m2g_zero_at_target(self):
        assert gain_m2g(0.0, GAINS) == 0.0

    def test_ath_out_of_influence(self):
        assert gain_ath(20.0, GAINS) == 0.0

    def test_ath_midpoint(self):
        assert gain_ath(7.5, GAINS) == pytest.approx(15.0)

    def test_ath_maximum(self):
        assert gain_ath(0.0, GAINS) == 30.0

    def test_adr_out_of_influence(self):
        assert gain_adr(25.0, GAINS) == 0.0

    def test_adr_midpoint(self):
        assert gain_adr(10.0, GAINS) == pytest.approx(15.0)

    def test_adr_maximum(self):
        assert gain_adr(0.0, GAINS) == 30.0

    def test_continuity_at_branch_points(self):
        eps = 1e-13
        assert abs(gain_m2g(GAINS.b_m2g - eps, GAINS)
                   - gain_m2g(GAINS.b_m2g, GAINS)) < 1e-12
        assert abs(gain_ath(GAINS.b_ath - eps, GAINS)
                   - gain_ath(GAINS.b_ath, GAINS)) < 1e-12
        assert abs(gain_adr(GAINS.b_adr - eps, GAINS)
                   - gain_adr(GAINS.b_adr, GAINS)) < 1e-12

    def test_positive_gains_required(self):
        with pytest.raises(ValueError):
            BehaviorGains(b_ath=0.0)


class TestAvoidObstacle:
    def test_obstacle_ahead_right_deflects_left(self):
        # heading 0, obstacle at (10, -1): rho > 0, bearing rotated so the
        # UAV steers to the left of the obstacle (+y)
        state = make_state(heading=0.0)
        out = v_avoid_obstacle(state, (10.0, -1.0), d_ath=5.0)
        bearing = np.array([10.0 / 5.0, -1.0 / 5.0])
        expected = np.array([-bearing[1], bearing[0], 0.0])
        np.testing.assert_allclose(out, expected, atol=1e-12)
        assert out[1] > 0.0

    def test_mirrored_obstacle_opposite_rotation(self):
        state = make_state(heading=0.0)
        right = v_avoid_obstacle(state, (10.0, -1.0), d_ath=5.0)
        left = v_avoid_obstacle(state, (10.0, 1.0), d_ath=5.0)
        # antisymmetric geometry: the rotation sign flips with the mirror
        assert np.sign(right[1]) != np.sign(left[1])

    def test_output_horizontal_with_distance_scaled_magnitude(self):
        state = make_state(position=(3.0, 4.0, 120.0), heading=0.7)
        out = v_avoid_obstacle(state, (30.0, -8.0), d_ath=2.0)
        assert out[2] == 0.0
        h = math.hypot(30.0 - 3.0, -8.0 - 4.0)
        assert np.linalg.norm(out) == pytest.approx(h / 2.0)

    def test_dead_ahead_picks_a_side(self):
        # rho = 0 exactly: sgn(0) resolves to +1 so avoidance never cancels
        state = make_state(heading=0.0)
        out = v_avoid_obstacle(state, (10.0, 0.0), d_ath=5.0)
        assert np.linalg.norm(out) == pytest.approx(10.0 / 5.0)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            v_avoid_obstacle(make_state(), (10.0, 0.0), d_ath=0.0)


class TestAvoidUav:
    def test_points_away(self):
        out = v_avoid_uav(make_state(), (5.0, 0.0, 0.0), d_adr=5.0)
        np.testing.assert_allclose(out, [-1.0, 0.0, 0.0])

    def test_antisymmetric_pair(self):
        a = make_state(position=(0.0, 0.0, 0.0))
        b = make_state(position=(3.0, 4.0, 0.0))
        va = v_avoid_uav(a, b.position, d_adr=5.0)
        vb = v_avoid_uav(b, a.position, d_adr=5.0)
        np.testing.assert_allclose(va, -vb)

    @given(st.floats(min_value=-50, max_value=50),
           st.floats(min_value=-50, max_value=50),
           st.floats(min_value=-50, max_value=50))
    def test_unit_magnitude(self, x, y, z):
        other = np.array([x, y, z])
        d = float(np.linalg.norm(other))
        if d < 1e-6:
            return
        out = v_avoid_uav(make_state(), other, d_adr=d)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-9)


class TestComposeVelocity:
    def test_single_term_far_target(self):
        inputs = BehaviorInputs(self_state=make_state(),
                                target=np.array([100.0, 0.0, 0.0]))
        v = compose_velocity(inputs, GAINS, PARAMS)
        # a_m2g = 30 exceeds max_speed, so the command clamps to 15 along +x
        np.testing.assert_allclose(v, [15.0, 0.0, 0.0])

    def test_hover_at_target(self):
        inputs = BehaviorInputs(self_state=make_state(),
                                target=np.array([0.0, 0.0, 0.0]))
        v = compose_velocity(inputs, GAINS, PARAMS)
        np.testing.assert_array_equal(v, [0.0, 0.0, 0.0])

    def test_obstacle_ahead_deflects_and_clears(self):
        """End-to-end micro sim: obstacle dead ahead on the LOS; the flown
        path must deviate and clear the cylinder by more than the body size."""
        radius = 8.0
        center = np.array([60.0, 0.0])
        state = make_state(position=(0.0, 0.0, 50.0), heading=0.0)
        target = np.array([140.0, 0.0, 50.0])
        min_miss = math.inf
        deviated = False
        for _ in range(400):
            d_center = float(np.hypot(*(state.position[:2] - center)))
            d_boundary = max(d_center - radius, 1e-6)
            inputs = BehaviorInputs(
                self_state=state, target=target,
                nearest_obstacle=((center[0], center[1]), radius, d_boundary))
            v = compose_velocity(inputs, GAINS, PARAMS)
            if abs(v[1]) > 1e-9:
                deviated = True
            state = step(state, v, 0.1)
            min_miss = min(min_miss,
                           float(np.hypot(*(state.position[:2] - center)))
                           - radius)
            if np.linalg.norm(target - state.position) < 1.0:
                break
        assert deviated
        assert np.linalg.norm(target - state.position) < 1.0
        assert min_miss > PARAMS.size_d

    def test_obstacle_beside_path_does_not_stall(self):
        """An obstacle abreast of the route once trapped the controller in a
        zero-velocity equilibrium (avoidance anti-parallel to attraction)."""
        radius = 25.0
        center = np.array([0.0, 30.0])
        state = make_state(position=(-20.0, 0.0, 50.0), heading=0.0)
        target = np.array([20.0, 0.0, 50.0])
        for _ in range(600):
            d_boundary = max(float(np.hypot(*(state.position[:2] - center)))
                             - radius, 1e-6)
            inputs = BehaviorInputs(
                self_state=state, target=target,
                nearest_obstacle=((center[0], center[1]), radius, d_boundary))
            v = compose_velocity(inputs, GAINS, PARAMS)
            state = step(state, v, 0.1)
            if np.linalg.norm(target - state.position) < 1.0:
                break
        assert np.linalg.norm(target - state.position) < 1.0

    def test_head_on_pair_never_collides(self):
        """Two UAVs flying through each other's start points must keep at
        least 2*D of separation for the whole encounter."""
        a = make_state(position=(0.0, 0.0, 50.0), heading=0.0)
        b = make_state(position=(60.0, 0.0, 50.0), heading=math.pi)
        target_a = np.array([60.0, 0.0, 50.0])
        target_b = np.array([0.0, 0.0, 50.0])
        min_sep = math.inf
        for _ in range(800):
            d = float(np.linalg.norm(a.position - b.position))
            min_sep = min(min_sep, d)
            va = compose_velocity(BehaviorInputs(
                self_state=a, target=target_a,
                nearest_uav=(b.position, max(d, 1e-6))), GAINS, PARAMS)
            vb = compose_velocity(BehaviorInputs(
                self_state=b, target=target_b,
                nearest_uav=(a.position, max(d, 1e-6))), GAINS, PARAMS)
            a = step(a, va, 0.1)
            b = step(b, vb, 0.1)
        assert min_sep >= 2.0 * PARAMS.size_d

    def test_altitude_correction_pushes_up(self):
        state = make_state(position=(0.0, 0.0, 10.0))
        inputs = BehaviorInputs(self_state=state,
                                target=np.array([100.0, 0.0, 10.0]),
                                min_altitude=14.0)
        v = compose_velocity(inputs, GAINS, PARAMS)
        assert v[2] > 0.0

    def test_emergency_rule_cuts_closing_speed(self):
        other = np.array([3.0, 0.0, 50.0])
        d = 3.0
        assert d < EMERGENCY_SEPARATION_FACTOR * PARAMS.size_d
        inputs = BehaviorInputs(self_state=make_state(position=(0.0, 0.0, 50.0)),
                                target=np.array([100.0, 0.0, 50.0]),
                                nearest_uav=(other, d))
        v = compose_velocity(inputs, GAINS, PARAMS)
        toward = np.array([1.0, 0.0, 0.0])
        assert float(np.dot(v, toward)) <= 1e-9

    @given(st.floats(min_value=-200, max_value=200),
           st.floats(min_value=-200, max_value=200),
           st.floats(min_value=5, max_value=200),
           st.floats(min_value=0.5, max_value=60.0))
    def test_speed_never_exceeds_max(self, tx, ty, tz, d_obs):
        state = make_state(position=(0.0, 0.0, 50.0), heading=0.3)
        inputs = BehaviorInputs(
            self_state=state, target=np.array([tx, ty, tz]),
            nearest_obstacle=((40.0, 10.0), 5.0, d_obs),
            nearest_uav=(np.array([5.0, 5.0, 50.0]),
                         float(np.linalg.norm([5.0, 5.0, 0.0]))),
            min_altitude=52.0)
        v = compose_velocity(inputs, GAINS, PARAMS)
        assert np.linalg.norm(v) <= PARAMS.max_speed + 1e-9

import math

import numpy as np
import pytest

import uav_relay.pso as pso_mod
from uav_relay.environment import Environment, Obstacle, flat_terrain
from uav_relay.fitness import FitnessContext, FitnessWeights
from uav_relay.pso import (PsoConfig, SearchInfeasibleError, _leg_accepts,
                           boundary_reached, explore_to_boundary, init_swarm,
                           pso_step, search_optimal)
from uav_relay.vehicle import UavParams


def make_ctx(current=(400.0, 400.0, 100.0), previous=(150.0, 400.0, 100.0),
             target=(1800.0, 400.0, 100.0), obstacles=()):
    return FitnessContext(current=np.array(current, dtype=float),
                          previous_node=np.array(previous, dtype=float),
                          target=np.array(target, dtype=float),
                          obstacles=obstacles, params=UavParams(),
                          weights=FitnessWeights())


class TestConfig:
    def test_defaults_match_reference_tuning(self):
        cfg = PsoConfig()
        assert (cfg.population, cfg.iter_max) == (100, 100)
        assert (cfg.inertia, cfg.inertia_damping) == (1.0, 0.98)
        assert (cfg.c1, cfg.c2) == (1.5, 1.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            PsoConfig(population=1)
        with pytest.raises(ValueError):
            PsoConfig(iter_max=0)
        with pytest.raises(ValueError):
            PsoConfig(c1=-1.0)


class TestInitSwarm:
    def test_two_particles_flat_world(self, flat_env):
        cfg = PsoConfig(population=2, seed=1)
        swarm = init_swarm((400.0, 400.0, 100.0), make_ctx(), flat_env, cfg)
        radii = np.linalg.norm(swarm.positions - swarm.center, axis=1)
        assert np.all(radii <= 50.0 + 1e-9)
        assert np.all(np.isfinite(swarm.pbest_costs))
        assert np.all(swarm.velocities == 0.0)

    def test_same_seed_bit_identical(self, flat_env):
        cfg = PsoConfig(population=30, seed=42)
        a = init_swarm((400.0, 400.0, 100.0), make_ctx(), flat_env, cfg)
        b = init_swarm((400.0, 400.0, 100.0), make_ctx(), flat_env, cfg)
        np.testing.assert_array_equal(a.positions, b.positions)
        np.testing.assert_array_equal(a.pbest_costs, b.pbest_costs)
        assert a.gbest_cost == b.gbest_cost

    def test_margin_only_region_still_feasible(self):
        """Center surrounded by the finite safety-margin ring (not the
        collision core): penalties are finite, so init must succeed."""
        ob = Obstacle(id="wide", center=(400.0, 400.0), radius=300.0,
                      base_height=0.0, top_height=400.0)
        env = Environment(terrain=flat_terrain(101, 101, 20.0, 0.0),
                          obstacles=(ob,),
                          bounds=((0, 0, 0), (2000, 2000, 500)))
        # center 330 m out: the whole sensing ball is beyond the collision
        # radius 301 but partially inside the margin ring (clear radius 311)
        ctx = make_ctx(current=(730.0, 400.0, 100.0),
                       previous=(500.0, 400.0, 100.0), obstacles=(ob,))
        swarm = init_swarm((730.0, 400.0, 100.0), ctx, env, PsoConfig(seed=3))
        assert math.isfinite(swarm.gbest_cost)

    def test_fully_blocked_raises(self):
        ob = Obstacle(id="huge", center=(400.0, 400.0), radius=60.0,
                      base_height=0.0, top_height=400.0)
        env = Environment(terrain=flat_terrain(101, 101, 20.0, 0.0),
                          obstacles=(ob,),
                          bounds=((0, 0, 0), (2000, 2000, 500)))
        ctx = make_ctx(current=(400.0, 400.0, 100.0),
                       previous=(390.0, 400.0, 100.0), obstacles=(ob,))
        with pytest.raises(SearchInfeasibleError):
            init_swarm((400.0, 400.0, 100.0), ctx, env,
                       PsoConfig(seed=4, init_retries=2))


class TestPsoStep:
    def test_fixed_point_at_gbest(self, flat_env):
        cfg = PsoConfig(population=5, seed=2)
        ctx = make_ctx()
        swarm = init_swarm((400.0, 400.0, 100.0), ctx, flat_env, cfg)
        swarm.positions[:] = swarm.gbest_position
        swarm.pbest_positions[:] = swarm.gbest_position
        swarm.pbest_costs[:] = swarm.gbest_cost
        swarm.velocities[:] = 0.0
        before = swarm.positions.copy()
        pso_step(swarm, ctx, flat_env, cfg, iteration=0)
        np.testing.assert_array_equal(swarm.positions, before)
        assert swarm.gbest_cost == pytest.approx(swarm.gbest_cost)

    def test_ballistic_drift_without_attraction(self, flat_env):
        cfg = PsoConfig(population=4, seed=3, c1=0.0, c2=0.0,
                        inertia=1.0, inertia_damping=1.0)
        ctx = make_ctx()
        swarm = init_swarm((400.0, 400.0, 100.0), ctx, flat_env, cfg)
        swarm.velocities[:] = np.array([1.0, -0.5, 0.25])
        expected = pso_mod._clamp_to_ball(swarm.positions + swarm.velocities,
                                          swarm.center, swarm.radius)
        pso_step(swarm, ctx, flat_env, cfg, iteration=0)
        np.testing.assert_allclose(swarm.positions, expected)

    def test_positions_stay_in_ball(self, flat_env):
        cfg = PsoConfig(population=40, seed=5)
        ctx = make_ctx()
        swarm = init_swarm((400.0, 400.0, 100.0), ctx, flat_env, cfg)
        for k in range(30):
            pso_step(swarm, ctx, flat_env, cfg, k)
            radii = np.linalg.norm(swarm.positions - swarm.center, axis=1)
            assert np.all(radii <= 50.0 + 1e-6)


class TestSearchOptimal:
    def test_trace_length_and_monotonicity(self, flat_env):
        cfg = PsoConfig(population=50, iter_max=40, seed=6)
        pos, cost, trace = search_optimal((400.0, 400.0, 100.0), make_ctx(),
                                          flat_env, cfg)
        assert trace.shape == (40,)
        assert np.all(np.diff(trace) <= 0.0)
        assert trace[-1] == pytest.approx(cost)

    def test_deterministic_in_seed(self, flat_env):
        cfg = PsoConfig(population=40, iter_max=30, seed=7)
        a = search_optimal((400.0, 400.0, 100.0), make_ctx(), flat_env, cfg)
        b = search_optimal((400.0, 400.0, 100.0), make_ctx(), flat_env, cfg)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]
        np.testing.assert_array_equal(a[2], b[2])

    def test_obstacle_free_optimum_on_los_sphere(self, flat_env):
        """Analytic optimum with no obstacles: the LOS point on the sensing
        sphere (target angle 0, step length exactly R_S)."""
        cfg = PsoConfig(seed=8)
        center = np.array([400.0, 400.0, 100.0])
        ctx = make_ctx(current=center, previous=(150.0, 400.0, 100.0),
                       target=(1800.0, 400.0, 100.0))
        pos, cost, _ = search_optimal(center, ctx, flat_env, cfg)
        assert np.linalg.norm(pos - center) == pytest.approx(50.0, abs=0.5)
        analytic = center + np.array([50.0, 0.0, 0.0])
        assert np.linalg.norm(pos - analytic) < 2.5

    def test_sphere_function_oracle(self, flat_env, monkeypatch):
        """Swap the objective for ||x - x*||^2 with x* inside the ball: the
        swarm must land within 1% of R_S of the known optimum."""
        center = np.array([400.0, 400.0, 100.0])
        x_star = center + np.array([20.0, -15.0, 10.0])

        def sphere(cands, ctx, env):
            return np.sum((np.asarray(cands) - x_star) ** 2, axis=-1)

        monkeypatch.setattr(pso_mod, "total_fitness_batch", sphere)
        cfg = PsoConfig(seed=9)
        pos, cost, _ = search_optimal(center, make_ctx(), flat_env, cfg)
        assert np.linalg.norm(pos - x_star) < 0.01 * 50.0

    def test_beats_random_probes(self, obstacle_env):
        """Returned cost must not exceed the best of 10^4 random feasible
        probes of the true objective."""
        from uav_relay.fitness import total_fitness_batch
        center = np.array([460.0, 500.0, 100.0])
        ctx = make_ctx(current=center, previous=(250.0, 500.0, 100.0),
                       target=(1800.0, 500.0, 100.0),
                       obstacles=obstacle_env.obstacles)
        cfg = PsoConfig(seed=10)
        pos, cost, _ = search_optimal(center, ctx, obstacle_env, cfg)
        rng = np.random.default_rng(11)
        u = rng.standard_normal((10_000, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        probes = center + u * (50.0 * rng.random((10_000, 1)) ** (1 / 3))
        best_probe = np.min(total_fitness_batch(probes, ctx, obstacle_env))
        assert cost <= best_probe + 1e-9


class TestExploreLoop:
    def test_boundary_predicate(self):
        cfg = PsoConfig()
        anchor = np.zeros(3)
        assert not boundary_reached(anchor, np.array([200.0, 0, 0]),
                                    50.0, 300.0, cfg)
        assert boundary_reached(anchor, np.array([251.0, 0, 0]),
                                50.0, 300.0, cfg)

    def test_leg_accepts_requires_outward_progress(self):
        cfg = PsoConfig()
        anchor = np.zeros(3)
        current = np.array([100.0, 0.0, 0.0])
        assert _leg_accepts(anchor, current, np.array([149.0, 0, 0]), 300.0, cfg)
        assert not _leg_accepts(anchor, current, np.array([100.2, 0, 0]),
                                300.0, cfg)
        assert not _leg_accepts(anchor, current, np.array([301.0, 0, 0]),
                                300.0, cfg)

    def test_flat_world_chain(self, flat_env):
        """Far target over empty ground: about R_C / R_S legs, final point
        within [R_C - 2*R_S, R_C] of the anchor."""
        params = UavParams()
        cfg = PsoConfig(seed=12)
        anchor = np.array([200.0, 1000.0, 100.0])
        res = explore_to_boundary(anchor, anchor, (1900.0, 1000.0, 100.0),
                                  flat_env, params, cfg)
        assert res.complete and not res.destination_reached
        assert 5 <= len(res.intermediate_points) <= 7
        final = np.linalg.norm(res.final_position - anchor)
        assert params.comm_range - 2 * params.sense_range <= final <= \
            params.comm_range

    def test_first_leg_near_sensing_radius(self, flat_env):
        cfg = PsoConfig(seed=13)
        anchor = np.array([200.0, 1000.0, 100.0])
        res = explore_to_boundary(anchor, anchor, (1900.0, 1000.0, 100.0),
                                  flat_env, UavParams(), cfg)
        first = np.linalg.norm(res.intermediate_points[0] - anchor)
        assert 45.0 <= first <= 50.0

    def test_close_target_detected_immediately(self, flat_env):
        cfg = PsoConfig(seed=14)
        anchor = np.array([400.0, 400.0, 100.0])
        target = anchor + np.array([40.0, 0.0, 0.0])
        res = explore_to_boundary(anchor, anchor, target, flat_env,
                                  UavParams(), cfg)
        assert res.destination_reached
        assert len(res.intermediate_points) <= 1
        np.testing.assert_array_equal(res.final_position, target)

    def test_start_outside_comm_range_rejected(self, flat_env):
        with pytest.raises(ValueError):
            explore_to_boundary((0.0, 0.0, 100.0), (400.0, 0.0, 100.0),
                                (900.0, 0.0, 100.0), flat_env, UavParams(),
                                PsoConfig())

"""Deployment of a UAV relay chain forming a multihop ad-hoc route.

The library combines swarm-based position search (pso), a composite cost
over candidate positions (fitness), a reactive flight controller (behavior),
and a sequential four-state deployment simulator (deployment) over a 2.5D
terrain world (environment).
"""

from .behavior import (BehaviorGains, BehaviorInputs, compose_velocity,
                       gain_adr, gain_ath, gain_m2g, v_avoid_obstacle,
                       v_avoid_uav, v_move_to_target)
from .deployment import (Assigned, Explore, Metrics, Occupied, RouteGraph,
                         RunResult, SimClock, Simulator, Unassigned,
                         compute_metrics, run_deployment, tick_uav)
from .environment import (Environment, Obstacle, OutOfTerrainError, Terrain,
                          cross_section_at, detect_obstacles, flat_terrain,
                          ground_height, load_terrain, ramp_terrain,
                          random_terrain, save_terrain)
from .fitness import (INFEASIBLE, FitnessContext, FitnessWeights, f1_obstacle,
                      f2_target_angle, f3_sensing, f4_communication,
                      total_fitness, total_fitness_batch)
from .pso import (ExploreResult, PsoConfig, SearchInfeasibleError, Swarm,
                  explore_to_boundary, init_swarm, pso_step, search_optimal)
from .scenario_io import (Scenario, ScenarioError, TerrainSpec,
                          build_environment, load_scenario, save_scenario,
                          scenario_hash, serialize_scenario, verify_output,
                          write_artifacts)
from .vehicle import UavParams, UavState, clamp_speed, step

__version__ = "0.1.0"

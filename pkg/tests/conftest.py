"""Shared fixtures: small worlds for unit tests and cached full runs for the
acceptance suite (each scenario/seed pair is simulated once per session)."""
import os
from dataclasses import replace

import numpy as np
import pytest

from uav_relay.environment import Environment, Obstacle, flat_terrain
from uav_relay.deployment import run_deployment
from uav_relay.scenario_io import load_scenario
from uav_relay.vehicle import UavParams

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")
ACCEPTANCE_SEEDS = range(1, 11)


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, f"{name}.toml")


@pytest.fixture
def params() -> UavParams:
    return UavParams()


@pytest.fixture
def flat_env() -> Environment:
    """2 km flat world at ground level 0, no obstacles."""
    return Environment(
        terrain=flat_terrain(rows=101, cols=101, cell_size=20.0, height=0.0),
        obstacles=(),
        bounds=((0.0, 0.0, 0.0), (2000.0, 2000.0, 500.0)))


@pytest.fixture
def obstacle_env() -> Environment:
    """Flat world with one tall cylinder at (500, 500)."""
    return Environment(
        terrain=flat_terrain(rows=101, cols=101, cell_size=20.0, height=0.0),
        obstacles=(Obstacle(id="pillar", center=(500.0, 500.0), radius=20.0,
                            base_height=0.0, top_height=400.0),),
        bounds=((0.0, 0.0, 0.0), (2000.0, 2000.0, 500.0)))


def _timed_run(scenario, seed):
    import time
    t0 = time.perf_counter()
    result = run_deployment(replace(scenario, master_seed=seed))
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def paper_runs():
    """(scenario_name, seed) -> (RunResult, wall_seconds) over both
    paper-scale scenarios and ten seeds."""
    runs = {}
    for name in ("paper_scale_1", "paper_scale_2"):
        scenario = load_scenario(scenario_path(name))
        for seed in ACCEPTANCE_SEEDS:
            runs[(name, seed)] = _timed_run(scenario, seed)
    return runs


@pytest.fixture(scope="session")
def flat_runs():
    """(seed,) -> (RunResult, wall_seconds) on the obstacle-free control."""
    scenario = load_scenario(scenario_path("flat_control"))
    return {seed: _timed_run(scenario, seed) for seed in ACCEPTANCE_SEEDS}

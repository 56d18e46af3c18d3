"""Shared fixtures: the expensive solves run once per session."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

import visitsolve as vs
from visitsolve.scenario import bundled_scenario_path, load_scenario


@dataclass
class SolvedScenario:
    scenario: object
    grid: object
    statespace: object
    cost: object
    solution: object
    solve_seconds: float


def _solve(name: str) -> SolvedScenario:
    sc = load_scenario(bundled_scenario_path(name))
    grid = sc.build_grid()
    ss = sc.build_statespace()
    cost = sc.build_cost(ss)
    t0 = time.perf_counter()
    sol = vs.backward_solve(grid, ss, cost)
    return SolvedScenario(sc, grid, ss, cost, sol, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def test1_solved() -> SolvedScenario:
    return _solve("test1")


@pytest.fixture(scope="session")
def test2_solved() -> SolvedScenario:
    return _solve("test2")


@pytest.fixture(scope="session")
def test1_trajectories(test1_solved):
    origin = vs.synthesize(test1_solved.solution, (0.0, 0.0), 0)
    corner = vs.synthesize(test1_solved.solution, (0.9, 0.9), 0)
    return origin, corner


@pytest.fixture(scope="session")
def small_single_target():
    """Cheap one-target scenario for unit-level solver checks."""
    sc = vs.scenario_from_dict({
        "name": "unit-small",
        "domain": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0]},
        "grid": {"dx": 0.1, "dt": 0.05, "horizon": 1.0},
        "lambda": 0.0,
        "targets": [{"center": [0.5, 0.0], "radius": 0.0}],
        "cost": "test1",
        "terminal_prefactor": 1.0,
        "switch_cost_scale": 1.0,
        "initial_density": {"kind": "uniform"},
        "initial_state": "0",
    })
    grid = sc.build_grid()
    ss = sc.build_statespace()
    cost = sc.build_cost(ss)
    sol = vs.backward_solve(grid, ss, cost)
    return SolvedScenario(sc, grid, ss, cost, sol, 0.0)

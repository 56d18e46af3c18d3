"""Build real run directories once per session through the solver CLI.

The viewer is exercised only against the documented artifacts (manifest
plus CSV); the solver is driven as a subprocess, never imported.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[2]
SCENARIOS = REPO / "src" / "visitsolve" / "scenarios"

TINY = {
    "name": "tiny",
    "domain": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0]},
    "grid": {"dx": 0.2, "dt": 0.1, "horizon": 0.5},
    "targets": [{"center": [0.4, 0.0], "radius": 0.0}],
    "cost": "test1",
    "initial_density": {"kind": "uniform"},
    "initial_state": "0",
}


def solver(*args: str) -> None:
    proc = subprocess.run([sys.executable, "-m", "visitsolve.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, f"solver CLI failed: {proc.stderr}"


@pytest.fixture(scope="session")
def tiny_run(tmp_path_factory) -> Path:
    """Two-state run with density at every level and one trajectory."""
    base = tmp_path_factory.mktemp("tiny")
    sc = base / "tiny.json"
    sc.write_text(json.dumps(TINY))
    out = base / "run"
    solver("transport", "--scenario", str(sc), "--out", str(out),
           "--levels", "all")
    solver("trajectory", "--run", str(out), "--x0", "0.0,0.0")
    return out


@pytest.fixture(scope="session")
def tour_run(tmp_path_factory) -> Path:
    """Three-target tour: value slices at level 0 plus two trajectories."""
    out = tmp_path_factory.mktemp("tour") / "run"
    solver("solve-hjb", "--scenario", str(SCENARIOS / "test1.json"),
           "--out", str(out))
    solver("trajectory", "--run", str(out), "--x0", "0.0,0.0")
    solver("trajectory", "--run", str(out), "--x0", "0.9,0.9",
           "--tag", "corner")
    return out


@pytest.fixture(scope="session")
def disc_run(tmp_path_factory) -> Path:
    """Single-disc stopping run with densities at four chosen times."""
    out = tmp_path_factory.mktemp("disc") / "run"
    solver("transport", "--scenario", str(SCENARIOS / "test2.json"),
           "--out", str(out), "--levels", "0,3,8,12")
    return out


@pytest.fixture(scope="session")
def crowd_run(tmp_path_factory) -> Path:
    """Crowd-coupled run with densities at start, middle, horizon."""
    out = tmp_path_factory.mktemp("crowd") / "run"
    solver("mfg", "--scenario", str(SCENARIOS / "test3.json"),
           "--out", str(out), "--levels", "0,7,15")
    return out

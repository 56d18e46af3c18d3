"""Scenario schema and the command-line surface."""

from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from visitsolve import ScenarioError, scenario_from_dict, scenario_hash
from visitsolve.io import normalized_dict
from visitsolve.scenario import bundled_scenario_path, load_scenario

BUNDLED = ("test1", "test2", "test3", "test3_threetargets")


def _tiny(**overrides):
    base = {
        "name": "tiny",
        "domain": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0]},
        "grid": {"dx": 0.2, "dt": 0.1, "horizon": 0.5},
        "targets": [{"center": [0.4, 0.0], "radius": 0.0}],
        "cost": "test1",
        "initial_density": {"kind": "uniform"},
        "initial_state": "0",
    }
    base.update(overrides)
    return base


def test_bundled_scenarios_load():
    for name in BUNDLED:
        sc = load_scenario(bundled_scenario_path(name))
        assert sc.name == name
        assert sc.build_grid().n_levels >= 2


def test_bundled_test1_parameters():
    sc = load_scenario(bundled_scenario_path("test1"))
    assert sc.n_targets == 3
    assert sc.horizon == 5.0
    assert sc.switch_cost_scale == 1.0 and sc.terminal_prefactor == 1.0
    assert not sc.coupled


def test_bundled_test3_is_coupled():
    sc = load_scenario(bundled_scenario_path("test3"))
    assert sc.coupled and sc.cost == "congestion"
    assert sc.max_iters == 20


def test_normalized_round_trip_preserves_hash():
    sc = scenario_from_dict(_tiny())
    again = scenario_from_dict(json.loads(json.dumps(normalized_dict(sc))))
    assert scenario_hash(sc) == scenario_hash(again)


def test_snapped_steps_are_echoed():
    sc = scenario_from_dict(_tiny(grid={"dx": 0.066, "dt": 0.033, "horizon": 0.5}))
    norm = normalized_dict(sc)
    assert norm["grid"]["dx"] == pytest.approx(2.0 / 30)
    assert norm["grid"]["dt"] == pytest.approx(0.5 / 15)


@pytest.mark.parametrize("breakage, fragment", [
    (dict(targets=[]), "nonempty"),
    (dict(targets=[{"center": [2.0, 0.0]}]), "outside the domain"),
    (dict(targets=[{"center": [0.0, 0.0], "radius": 0.3},
                   {"center": [0.2, 0.0], "radius": 0.3}]), "disjoint"),
    (dict(cost="nope"), "cost"),
    (dict(initial_state="00"), "bitstring"),
    (dict(theta=0.0), "theta"),
    (dict(terminal_prefactor=3.0), "terminal_prefactor"),
    (dict(grid={"dx": -0.1, "dt": 0.1, "horizon": 1.0}), "positive"),
    (dict(bogus_field=1), "unknown"),
    (dict(initial_density={"kind": "gaussian"}), "gaussian"),
])
def test_validation_rejects(breakage, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        scenario_from_dict(_tiny(**breakage))


def _cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "visitsolve.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture()
def tiny_file(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(_tiny()))
    return p


def test_cli_solve_writes_manifest_and_slices(tiny_file, tmp_path):
    out = tmp_path / "run"
    r = _cli("solve-hjb", "--scenario", str(tiny_file), "--out", str(out))
    assert r.returncode == 0, r.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"]["name"] == "tiny"
    assert (out / "solution.npz").exists()
    assert manifest["files"]["values"] == ["V_p0_k0.csv", "V_p1_k0.csv"]
    assert manifest["files"]["switch"] == ["sigma_p0_k0.csv", "sigma_p1_k0.csv"]
    assert manifest["scenario_hash"]


def test_cli_reruns_are_byte_identical(tiny_file, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert _cli("solve-hjb", "--scenario", str(tiny_file), "--out", str(out1)).returncode == 0
    assert _cli("solve-hjb", "--scenario", str(tiny_file), "--out", str(out2)).returncode == 0
    for f in sorted(p.name for p in out1.glob("V_*.csv")):
        assert (out1 / f).read_bytes() == (out2 / f).read_bytes()


def test_cli_check_passes_on_solved_scenario(tiny_file, tmp_path):
    out = tmp_path / "run"
    r = _cli("check", "--scenario", str(tiny_file), "--out", str(out))
    assert r.returncode == 0, r.stderr + r.stdout


def test_cli_trajectory_appends_to_manifest(tiny_file, tmp_path):
    out = tmp_path / "run"
    assert _cli("solve-hjb", "--scenario", str(tiny_file), "--out", str(out)).returncode == 0
    r = _cli("trajectory", "--run", str(out), "--x0", "0.0,0.0")
    assert r.returncode == 0, r.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["files"]["trajectory"]
    assert manifest["files"]["values"]  # earlier entries survive the merge
    assert len(manifest["commands"]) == 2


def test_cli_trajectory_outside_domain_fails_cleanly(tiny_file, tmp_path):
    out = tmp_path / "run"
    assert _cli("solve-hjb", "--scenario", str(tiny_file), "--out", str(out)).returncode == 0
    r = _cli("trajectory", "--run", str(out), "--x0", "3.0,0.0")
    assert r.returncode == 2
    assert "domain" in r.stderr


def test_cli_transport_writes_ledger(tiny_file, tmp_path):
    out = tmp_path / "run"
    r = _cli("transport", "--scenario", str(tiny_file), "--out", str(out))
    assert r.returncode == 0, r.stderr
    ledgers = list(out.glob("*ledger*.csv"))
    assert ledgers
    with open(ledgers[0]) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) >= 2  # header plus the forced exit rows


def test_cli_arrival_time_halfspace(tiny_file, tmp_path):
    out = tmp_path / "run"
    r = _cli("arrival-time", "--scenario", str(tiny_file), "--out", str(out),
             "--b", "1,0", "--sink-halfspace", "0,0.6")
    assert r.returncode == 0, r.stderr
    assert list(out.glob("tau_*.csv"))


def test_cli_rejects_garbage_scenario(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(_tiny(cost="nope")))
    r = _cli("solve-hjb", "--scenario", str(bad), "--out", str(tmp_path / "x"))
    assert r.returncode == 2
    assert "cost" in r.stderr


def test_cli_mfg_requires_coupled_scenario(tiny_file, tmp_path):
    r = _cli("mfg", "--scenario", str(tiny_file), "--out", str(tmp_path / "x"))
    assert r.returncode == 2

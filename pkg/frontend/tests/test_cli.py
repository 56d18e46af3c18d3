"""Command line behavior and the full bundled figure set."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

VIZ_SRC = Path(__file__).resolve().parents[1] / "src" / "visitviz"


def viz(*args: str):
    return subprocess.run([sys.executable, "-m", "visitviz.cli", *args],
                          capture_output=True, text=True)


def test_render_values_cli(tour_run, tmp_path):
    out = tmp_path / "figs"
    r = viz("render", "--run", str(tour_run), "--what", "values",
            "--times", "0", "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert len(list(out.glob("V_p*.png"))) == 8


def test_rerun_produces_identical_filenames(tour_run, tmp_path):
    out = tmp_path / "figs"
    args = ("render", "--run", str(tour_run), "--what", "values",
            "--times", "0", "--out", str(out))
    assert viz(*args).returncode == 0
    first = sorted(p.name for p in out.iterdir())
    assert viz(*args).returncode == 0
    assert sorted(p.name for p in out.iterdir()) == first


def test_values_reject_multiple_levels(tiny_run, tmp_path):
    r = viz("render", "--run", str(tiny_run), "--what", "values",
            "--times", "0,1", "--out", str(tmp_path / "f"))
    assert r.returncode == 2
    assert "single level" in r.stderr


def test_unknown_level_rejected(tiny_run, tmp_path):
    r = viz("render", "--run", str(tiny_run), "--what", "transport",
            "--times", "99", "--out", str(tmp_path / "f"))
    assert r.returncode == 2
    assert "99" in r.stderr


def test_missing_run_dir_rejected(tmp_path):
    r = viz("render", "--run", str(tmp_path / "nope"), "--what", "values")
    assert r.returncode == 2
    assert "manifest.json" in r.stderr


def test_default_output_lands_in_run_figures(tiny_run):
    r = viz("render", "--run", str(tiny_run), "--what", "trajectory")
    assert r.returncode == 0, r.stderr
    assert (tiny_run / "figures" / "trajectory.png").exists()


def test_full_figure_set_renders_for_all_bundled_runs(tour_run, disc_run,
                                                      crowd_run, tmp_path):
    """The three bundled runs render end to end with deterministic names."""
    sets = {}
    for label, run, what, times in [
        ("tour-values", tour_run, "values", "0"),
        ("tour-paths", tour_run, "trajectory", "all"),
        ("disc-transport", disc_run, "transport", "0,3,8,12"),
        ("crowd-transport", crowd_run, "transport", "all"),
    ]:
        out = tmp_path / label
        r = viz("render", "--run", str(run), "--what", what,
                "--times", times, "--out", str(out))
        assert r.returncode == 0, f"{label}: {r.stderr}"
        sets[label] = sorted(p.name for p in out.iterdir())
        assert sets[label]

    assert len([n for n in sets["tour-values"] if n.startswith("V_p")]) == 8
    assert sets["tour-paths"] == ["trajectory.png", "trajectory_corner.png"]
    assert len([n for n in sets["disc-transport"]
                if n.startswith("density_")]) == 4

    # re-render one set into a fresh directory: same names, nothing extra
    out2 = tmp_path / "tour-values-again"
    r = viz("render", "--run", str(tour_run), "--what", "values",
            "--times", "0", "--out", str(out2))
    assert r.returncode == 0
    assert sorted(p.name for p in out2.iterdir()) == sets["tour-values"]


def test_viewer_never_imports_the_solver():
    for path in VIZ_SRC.rglob("*.py"):
        assert "visitsolve" not in path.read_text(), path
    probe = ("import sys, visitviz; "
             "bad = [m for m in sys.modules if m.startswith('visitsolve')]; "
             "raise SystemExit(1 if bad else 0)")
    assert subprocess.run([sys.executable, "-c", probe]).returncode == 0

"""Run-directory loading and artifact parsing."""

from __future__ import annotations

import json
import shutil

import numpy as np
import pytest

from visitviz import VizError, load_run, read_ledger, read_trajectory


def test_load_reports_grid_and_kinds(tiny_run):
    m = load_run(tiny_run)
    assert m.n_states == 2
    assert m.n_targets == 1
    assert m.shape == (11, 11)
    assert m.levels_of("density") == [0, 1, 2, 3, 4, 5]
    assert m.levels_of("values") == [0, 1, 2, 3, 4, 5]
    labels = {ref.p_label for ref in m.slices_of("values")}
    assert labels == {"0", "1"}


def test_read_slice_header_and_shape(tiny_run):
    m = load_run(tiny_run)
    name = m.slices_of("values")[0].name
    meta, arr = m.read_slice(name)
    assert meta["x0"] == (-1.0, -1.0)
    assert meta["dx"] == pytest.approx(0.2)
    assert meta["p"] in ("0", "1")
    assert arr.shape == m.shape


def test_cell_weights_integrate_the_domain(tiny_run):
    m = load_run(tiny_run)
    assert float(m.cell_weights().sum()) == pytest.approx(4.0)


def test_missing_listed_file_is_reported(tiny_run, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(tiny_run, broken)
    victim = load_run(tiny_run).files_of("values")[0]
    (broken / victim).unlink()
    with pytest.raises(VizError, match=victim):
        load_run(broken)


def test_headerless_slice_is_reported(tiny_run, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(tiny_run, broken)
    victim = load_run(tiny_run).files_of("density")[0]
    lines = (broken / victim).read_text().splitlines()
    (broken / victim).write_text("\n".join(lines[1:]) + "\n")
    with pytest.raises(VizError, match=victim):
        load_run(broken)


def test_directory_without_manifest(tmp_path):
    with pytest.raises(VizError, match="manifest.json"):
        load_run(tmp_path)


def test_unparseable_manifest(tmp_path):
    (tmp_path / "manifest.json").write_text("{nope")
    with pytest.raises(VizError, match="JSON"):
        load_run(tmp_path)


def test_manifest_missing_required_key(tiny_run, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(tiny_run, broken)
    data = json.loads((broken / "manifest.json").read_text())
    del data["grid"]
    (broken / "manifest.json").write_text(json.dumps(data))
    with pytest.raises(VizError, match="grid"):
        load_run(broken)


def test_ledger_accounts_for_all_mass(tiny_run):
    m = load_run(tiny_run)
    initial, rows = read_ledger(m.path(m.files_of("ledger")[0]))
    assert initial > 0
    assert all(set(frm) <= {"0", "1"} for _, frm, _, _ in rows)
    # start state drains fully in this run, so transfers sum to the start
    moved = sum(mass for _, frm, _, mass in rows if frm == "0")
    assert moved == pytest.approx(initial, rel=1e-9)


def test_trajectory_reader(tiny_run):
    m = load_run(tiny_run)
    times, pos, labels = read_trajectory(m.path(m.files_of("trajectory")[0]))
    assert np.all(np.diff(times) > 0)
    assert np.all(np.abs(pos) <= 1.0 + 1e-12)
    assert labels[0] == "0" and labels[-1] == "1"

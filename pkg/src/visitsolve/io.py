"""Run artifacts: CSV slices, ledgers, manifests, solution archives.

Every CSV is comma-separated with '.' decimals, 17 significant digits and
'#'-prefixed header comments, so identical runs produce identical bytes.
Field slices carry their placement in the header:

    # x0=<lower coords> dx=<dx> t=<time> p=<bitstring or ->

Slice files are named <kind>_p<bitstring>_k<level>.csv; kinds are V, mu,
alpha0, alpha1, sigma, tau (tau has no state tag). The manifest JSON in
each output directory lists emitted files per kind plus grid metadata and
the scenario hash; reruns into the same directory merge their file lists.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ScenarioError
from .grid import Grid
from .hjb import ValueSolution
from .scenario import Scenario, normalized_dict, scenario_hash
from .statespace import StateSpace
from .transport import EXTERIOR, MassLedger

MANIFEST_NAME = "manifest.json"
NORMALIZED_NAME = "scenario.normalized.json"
SOLUTION_NAME = "solution.npz"


def _f(x: float) -> str:
    return "%.17g" % float(x)


def bits_label(bits: int, n_targets: int) -> str:
    return format(bits, f"0{n_targets}b") if n_targets > 0 else str(bits)


def slice_header(grid: Grid, t: float, p_label: str) -> str:
    x0 = ",".join(_f(l) for l in grid.lower)
    return f"# x0={x0} dx={_f(grid.dx)} t={_f(t)} p={p_label}"


def write_field_slice(path, grid: Grid, field: np.ndarray, t: float,
                      p_label: str = "-", integer: bool = False) -> None:
    arr = np.asarray(field)
    if arr.ndim == 1:
        arr = arr[None, :]
    fmt = "%d" if integer else "%.17g"
    np.savetxt(path, arr, fmt=fmt, delimiter=",",
               header=slice_header(grid, t, p_label), comments="")


def read_field_slice(path):
    """Returns (meta dict, 2-D array); meta has x0 (tuple), dx, t, p."""
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().strip()
    if not first.startswith("#"):
        raise ScenarioError(f"{path.name}: missing slice header")
    meta = {}
    for tok in first.lstrip("#").split():
        if "=" not in tok:
            continue
        key, val = tok.split("=", 1)
        if key == "x0":
            meta[key] = tuple(float(v) for v in val.split(","))
        elif key == "p":
            meta[key] = val
        else:
            meta[key] = float(val)
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return meta, data


def slice_name(kind: str, bits_str: str | None, level: int) -> str:
    if bits_str is None:
        return f"{kind}_k{level}.csv"
    return f"{kind}_p{bits_str}_k{level}.csv"


def write_ledger(path, ledger: MassLedger, n_targets: int) -> None:
    lines = [f"# initial_total={_f(ledger.initial_total)}",
             "level,from,to,mass"]
    for r in ledger.rows:
        to = "exterior" if r.to_bits == EXTERIOR else bits_label(r.to_bits, n_targets)
        lines.append(f"{r.level},{bits_label(r.from_bits, n_targets)},{to},{_f(r.mass)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_ledger(path):
    """Returns (initial_total, rows as (level, from_str, to_str, mass))."""
    text = Path(path).read_text().splitlines()
    initial = None
    rows = []
    for line in text:
        if line.startswith("#"):
            if "initial_total=" in line:
                initial = float(line.split("initial_total=")[1])
            continue
        if line.startswith("level,") or not line.strip():
            continue
        lvl, frm, to, mass = line.split(",")
        rows.append((int(lvl), frm, to, float(mass)))
    return initial, rows


def write_error_history(path, history) -> None:
    lines = ["z,E"]
    for i, e in enumerate(history):
        lines.append(f"{i + 2},{_f(e)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectory(dir_path, traj, n_targets: int, prefix: str = "trajectory"):
    """Writes <prefix>.csv and <prefix>_events.csv; returns the two names."""
    dir_path = Path(dir_path)
    dim = traj.positions.shape[1]
    cols = ",".join(f"x{c}" for c in range(dim))
    lines = [f"t,{cols},p"]
    for t, pos, p in zip(traj.times, traj.positions, traj.states):
        xs = ",".join(_f(v) for v in pos)
        lines.append(f"{_f(t)},{xs},{bits_label(int(p), n_targets)}")
    main = f"{prefix}.csv"
    (dir_path / main).write_text("\n".join(lines) + "\n")

    lines = [f"t,{cols},from,to"]
    for ev in traj.events:
        xs = ",".join(_f(v) for v in ev.position)
        lines.append(f"{_f(ev.time)},{xs},{bits_label(ev.from_bits, n_targets)},"
                     f"{bits_label(ev.to_bits, n_targets)}")
    events = f"{prefix}_events.csv"
    (dir_path / events).write_text("\n".join(lines) + "\n")
    return main, events


def save_solution(path, solution: ValueSolution) -> None:
    grid = solution.grid
    np.savez_compressed(
        path, values=solution.values, control=solution.control,
        switch=solution.switch, lower=np.asarray(grid.lower),
        upper=np.asarray(grid.upper), dx=grid.dx, dt=grid.dt,
        horizon=grid.horizon, n_targets=solution.statespace.n_targets,
        nonconverged=solution.nonconverged,
        backend=np.array(solution.backend))


def load_solution(path) -> ValueSolution:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"missing solve artifact: {path} (run solve-hjb first)")
    with np.load(path, allow_pickle=False) as z:
        grid = Grid.from_steps(tuple(z["lower"]), tuple(z["upper"]),
                               float(z["dx"]), float(z["dt"]), float(z["horizon"]))
        ss = StateSpace(int(z["n_targets"]))
        return ValueSolution(grid=grid, statespace=ss,
                             values=z["values"], control=z["control"],
                             switch=z["switch"],
                             nonconverged=int(z["nonconverged"]),
                             backend=str(z["backend"]))


def parse_levels(spec: str, n_levels: int) -> list[int]:
    if spec == "all":
        return list(range(n_levels))
    try:
        levels = sorted({int(tok) for tok in spec.split(",") if tok.strip() != ""})
    except ValueError:
        raise ScenarioError(f"bad --levels value '{spec}': use 'all' or comma-separated indices")
    for k in levels:
        if not 0 <= k < n_levels:
            raise ScenarioError(f"level {k} outside 0..{n_levels - 1}")
    return levels


def update_manifest(out_dir, command: str, sc: Scenario, grid: Grid,
                    n_states: int, new_files: dict) -> Path:
    """Create or merge the per-directory manifest; returns its path."""
    out_dir = Path(out_dir)
    path = out_dir / MANIFEST_NAME
    sc_hash = scenario_hash(sc)
    if path.exists():
        manifest = json.loads(path.read_text())
        if manifest.get("scenario_hash") != sc_hash:
            raise ScenarioError(
                f"{path} belongs to a different scenario; use a fresh --out directory")
    else:
        manifest = {
            "scenario_hash": sc_hash,
            "scenario": normalized_dict(sc),
            "grid": {"dx": grid.dx, "dt": grid.dt, "horizon": grid.horizon,
                     "shape": list(grid.shape), "n_levels": grid.n_levels},
            "n_states": n_states,
            "backend": _kernels.backend_name(),
            "commands": [],
            "files": {},
        }
    if command not in manifest["commands"]:
        manifest["commands"].append(command)
    files = manifest["files"]
    for kind, names in new_files.items():
        have = files.setdefault(kind, [])
        for name in names:
            if name not in have:
                have.append(name)
        have.sort()
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path

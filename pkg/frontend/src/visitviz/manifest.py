"""Run-directory manifest: locate, validate, and read solver artifacts.

A run directory holds a ``manifest.json`` plus the files it lists, grouped
by kind. Field slices are CSV matrices with a single comment header line

    # x0=<lower coords> dx=<dx> t=<time> p=<bitstring or ->

named ``<kind>_p<bitstring>_k<level>.csv`` (state-free kinds drop the
``_p`` part). The ledger is ``level,from,to,mass`` rows under a
``# initial_total=`` line. Everything here is read-only.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class VizError(Exception):
    """Bad or incomplete run directory input."""


MANIFEST_NAME = "manifest.json"

_SLICE_RE = re.compile(
    r"^(?P<kind>[A-Za-z]+[A-Za-z0-9]*?)(?:_p(?P<bits>[01]+))?_k(?P<level>\d+)\.csv$")

# kinds whose files carry the slice header
_SLICE_KINDS = ("values", "control", "switch", "density", "arrival", "snapshots")


@dataclass(frozen=True)
class SliceRef:
    kind: str
    p_label: str | None   # bitstring, None for state-free slices
    level: int
    name: str


@dataclass
class RunManifest:
    root: Path
    data: dict

    @property
    def grid(self) -> dict:
        return self.data["grid"]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data["grid"]["shape"])

    @property
    def n_states(self) -> int:
        return int(self.data["n_states"])

    @property
    def n_targets(self) -> int:
        return len(self.data["scenario"]["targets"])

    @property
    def targets(self) -> list[dict]:
        return self.data["scenario"]["targets"]

    @property
    def files(self) -> dict:
        return self.data.get("files", {})

    def files_of(self, kind: str) -> list[str]:
        return list(self.files.get(kind, []))

    def slices_of(self, kind: str) -> list[SliceRef]:
        out = []
        for name in self.files_of(kind):
            m = _SLICE_RE.match(name)
            if m is None:
                continue
            out.append(SliceRef(kind=kind, p_label=m.group("bits"),
                                level=int(m.group("level")), name=name))
        return out

    def levels_of(self, kind: str) -> list[int]:
        return sorted({ref.level for ref in self.slices_of(kind)})

    def path(self, name: str) -> Path:
        return self.root / name

    def read_slice(self, name: str):
        """Returns (meta, array) for a header-carrying CSV slice."""
        return read_slice(self.path(name))

    def node_axes(self) -> list[np.ndarray]:
        g = self.grid
        lower = self._lower()
        return [lower[c] + g["dx"] * np.arange(n)
                for c, n in enumerate(self.shape)]

    def _lower(self) -> list[float]:
        dom = self.data["scenario"]["domain"]
        return [float(v) for v in dom["lower"]]

    def cell_weights(self) -> np.ndarray:
        """Trapezoid quadrature weights: dx per node, halved on boundaries."""
        g = self.grid
        ws = []
        for n in self.shape:
            w = np.full(n, g["dx"])
            w[0] *= 0.5
            w[-1] *= 0.5
            ws.append(w)
        if len(ws) == 1:
            return ws[0]
        return ws[0][:, None] * ws[1][None, :]

    def time_of(self, level: int) -> float:
        return float(level * self.grid["dt"])


def read_slice(path: Path):
    """Parse one field slice; returns (meta dict, 2-D float array)."""
    path = Path(path)
    if not path.exists():
        raise VizError(f"missing slice file: {path}")
    with path.open() as fh:
        first = fh.readline().strip()
    meta = _parse_slice_header(first, path.name)
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return meta, data


def _parse_slice_header(line: str, name: str) -> dict:
    if not line.startswith("#"):
        raise VizError(f"{name}: missing '#' slice header")
    meta: dict = {}
    for tok in line.lstrip("#").split():
        if "=" not in tok:
            continue
        key, val = tok.split("=", 1)
        if key == "x0":
            meta[key] = tuple(float(v) for v in val.split(","))
        elif key == "p":
            meta[key] = val
        else:
            meta[key] = float(val)
    for key in ("x0", "dx", "t", "p"):
        if key not in meta:
            raise VizError(f"{name}: slice header lacks '{key}='")
    return meta


def read_ledger(path: Path):
    """Returns (initial_total, rows as (level, from_label, to_label, mass))."""
    path = Path(path)
    if not path.exists():
        raise VizError(f"missing ledger file: {path}")
    initial = None
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            if "initial_total=" in line:
                initial = float(line.split("initial_total=")[1])
            continue
        if not line.strip() or line.startswith("level,"):
            continue
        lvl, frm, to, mass = line.split(",")
        rows.append((int(lvl), frm, to, float(mass)))
    if initial is None:
        raise VizError(f"{path.name}: ledger lacks the initial_total header")
    return initial, rows


def read_trajectory(path: Path):
    """Returns (times, positions (M, dim), state labels list)."""
    path = Path(path)
    if not path.exists():
        raise VizError(f"missing trajectory file: {path}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("t,"):
        raise VizError(f"{path.name}: trajectory lacks a 't,x0,...' header")
    cols = lines[0].split(",")
    dim = sum(1 for c in cols if c.startswith("x"))
    times, pos, labels = [], [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        times.append(float(parts[0]))
        pos.append([float(v) for v in parts[1:1 + dim]])
        labels.append(parts[1 + dim])
    return np.asarray(times), np.asarray(pos), labels


def load_run(run_dir) -> RunManifest:
    """Load and fully validate a run directory.

    Every file the manifest lists must exist; CSV slices must carry the
    documented header. All problems are reported together.
    """
    root = Path(run_dir)
    mpath = root / MANIFEST_NAME
    if not mpath.exists():
        raise VizError(f"no {MANIFEST_NAME} in {root}")
    try:
        data = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise VizError(f"{mpath}: not valid JSON ({exc})")
    for key in ("grid", "n_states", "scenario", "files"):
        if key not in data:
            raise VizError(f"{mpath}: manifest lacks '{key}'")

    gaps: list[str] = []
    for kind, names in data["files"].items():
        for name in names:
            fpath = root / name
            if not fpath.exists():
                gaps.append(f"{kind}: {name} (missing)")
                continue
            if kind in _SLICE_KINDS and name.endswith(".csv"):
                with fpath.open() as fh:
                    first = fh.readline().strip()
                try:
                    _parse_slice_header(first, name)
                except VizError as exc:
                    gaps.append(f"{kind}: {exc}")
    if gaps:
        raise VizError("run directory is incomplete:\n  " + "\n  ".join(gaps))
    return RunManifest(root=root, data=data)

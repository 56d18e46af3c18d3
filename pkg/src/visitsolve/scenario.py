"""Declarative run descriptions: parsing, validation, normalization, hashing.

A scenario JSON fixes the domain, the discretization request, the target
list, the cost variant, the density setup and the coupling controls. The
requested dx/dt are snapped by the grid to divide the box and horizon
evenly; normalization echoes the snapped values back out so a saved copy
reloads to the identical normalized form. The sha256 of that canonical
form identifies a run.

Schema (all lengths in domain units):

  name               str
  domain             {"lower": [.,.], "upper": [.,.]}
  grid               {"dx": ., "dt": ., "horizon": .}
  lambda             discount rate >= 0, default 0
  targets            [{"center": [.,.], "radius": .}, ...]  radius 0 = point
  cost               "test1" | "test2-stop" | "congestion"
  terminal_prefactor 1 or 2
  switch_cost_scale  > 0, default 1; multiplies the per-target distances
  a_max              control bound, null = solver default
  descent            {"max_iter": int, "tol": float}
  initial_density    {"kind": "gaussian", "center": [.,.], "k": .} | {"kind": "uniform"}
  initial_state      bitstring of length N, default all zeros
  coupled            bool, default false
  transport_mode     "route" | "absorb"
  max_iters          fixed-point cap, default 50
  theta              damping in (0,1], default 1
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .costs import CostModel, Target
from .errors import ScenarioError
from .grid import Grid
from .statespace import MAX_TARGETS, StateSpace

COST_SELECTORS = ("test1", "test2-stop", "congestion")
TRANSPORT_MODES = {"route": "route", "route-to-destination": "route",
                   "absorb": "absorb", "absorb-to-exterior": "absorb"}
DENSITY_KINDS = ("gaussian", "uniform")
_TOP_KEYS = {"name", "domain", "grid", "lambda", "targets", "cost",
             "terminal_prefactor", "switch_cost_scale", "a_max", "descent",
             "initial_density", "initial_state", "coupled", "transport_mode",
             "max_iters", "theta"}


@dataclass(frozen=True)
class Scenario:
    name: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    dx: float
    dt: float
    horizon: float
    discount: float
    targets: tuple[Target, ...]
    cost: str
    terminal_prefactor: float
    switch_cost_scale: float
    a_max: float | None
    descent_max_iter: int
    descent_tol: float
    initial_density: dict
    initial_state: str
    coupled: bool
    transport_mode: str
    max_iters: int
    theta: float

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def build_grid(self) -> Grid:
        return Grid.from_steps(self.lower, self.upper, self.dx, self.dt, self.horizon)

    def build_statespace(self) -> StateSpace:
        return StateSpace(self.n_targets)

    def build_cost(self, statespace: StateSpace | None = None) -> CostModel:
        ss = statespace or self.build_statespace()
        return CostModel(statespace=ss, targets=self.targets,
                         switch_scale=self.switch_cost_scale,
                         terminal_prefactor=self.terminal_prefactor,
                         discount=self.discount,
                         congestion=(self.cost == "congestion"))

    def initial_state_bits(self) -> int:
        return int(self.initial_state, 2)

    def initial_density_fn(self):
        spec = self.initial_density
        if spec["kind"] == "uniform":
            return lambda pts: np.ones(np.asarray(pts).shape[:-1])
        c = np.asarray(spec["center"], dtype=float)
        k = float(spec["k"])
        return lambda pts: np.exp(-k * ((np.asarray(pts) - c) ** 2).sum(axis=-1))


def _fail(msg: str) -> ScenarioError:
    return ScenarioError(msg)


def scenario_from_dict(data: dict, default_name: str = "scenario") -> Scenario:
    if not isinstance(data, dict):
        raise _fail("scenario root must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise _fail(f"unknown scenario fields: {sorted(unknown)}")
    for req in ("domain", "grid", "targets"):
        if req not in data:
            raise _fail(f"missing required field '{req}'")

    dom = data["domain"]
    try:
        lower = tuple(float(v) for v in dom["lower"])
        upper = tuple(float(v) for v in dom["upper"])
    except (KeyError, TypeError) as exc:
        raise _fail(f"domain must have numeric 'lower' and 'upper' lists: {exc}")
    if len(lower) != len(upper) or len(lower) not in (1, 2):
        raise _fail("domain must be a 1-D or 2-D box with matching bounds")
    if any(u <= l for l, u in zip(lower, upper)):
        raise _fail("domain upper bounds must exceed lower bounds")

    g = data["grid"]
    try:
        dx, dt, horizon = float(g["dx"]), float(g["dt"]), float(g["horizon"])
    except (KeyError, TypeError) as exc:
        raise _fail(f"grid must define dx, dt, horizon: {exc}")
    if min(dx, dt, horizon) <= 0:
        raise _fail("dx, dt and horizon must be positive")

    raw_targets = data["targets"]
    if not isinstance(raw_targets, list) or not raw_targets:
        raise _fail("targets must be a nonempty list")
    if len(raw_targets) > MAX_TARGETS:
        raise _fail(f"at most {MAX_TARGETS} targets supported, got {len(raw_targets)}")
    targets = []
    for i, t in enumerate(raw_targets):
        try:
            center = tuple(float(v) for v in t["center"])
            radius = float(t.get("radius", 0.0))
        except (KeyError, TypeError) as exc:
            raise _fail(f"target {i + 1}: need numeric center (and optional radius): {exc}")
        if len(center) != len(lower):
            raise _fail(f"target {i + 1}: center dimension does not match the domain")
        if radius < 0:
            raise _fail(f"target {i + 1}: radius must be nonnegative")
        if any(c - radius < l or c + radius > u
               for c, l, u in zip(center, lower, upper)):
            raise _fail(f"target {i + 1}: target set extends outside the domain")
        targets.append(Target(center=center, radius=radius))
    for i in range(len(targets)):
        for j in range(i + 1, len(targets)):
            d = math.dist(targets[i].center, targets[j].center)
            if d <= targets[i].radius + targets[j].radius:
                raise _fail(f"targets {i + 1} and {j + 1} are not pairwise disjoint")

    lam = float(data.get("lambda", 0.0))
    if lam < 0:
        raise _fail("lambda must be nonnegative")
    cost = data.get("cost", "test1")
    if cost not in COST_SELECTORS:
        raise _fail(f"cost must be one of {COST_SELECTORS}, got '{cost}'")
    prefactor = float(data.get("terminal_prefactor", 1.0))
    if prefactor not in (1.0, 2.0):
        raise _fail("terminal_prefactor must be 1 or 2")
    scale = float(data.get("switch_cost_scale", 1.0))
    if scale <= 0:
        raise _fail("switch_cost_scale must be positive")
    a_max = data.get("a_max")
    if a_max is not None:
        a_max = float(a_max)
        if a_max <= 0:
            raise _fail("a_max must be positive when given")

    descent = data.get("descent", {})
    if not isinstance(descent, dict) or set(descent) - {"max_iter", "tol"}:
        raise _fail("descent accepts only 'max_iter' and 'tol'")
    d_iter = int(descent.get("max_iter", 50))
    d_tol = float(descent.get("tol", 1e-8))
    if d_iter < 1 or d_tol <= 0:
        raise _fail("descent.max_iter must be >= 1 and descent.tol positive")

    dens = data.get("initial_density", {"kind": "uniform"})
    if not isinstance(dens, dict) or dens.get("kind") not in DENSITY_KINDS:
        raise _fail(f"initial_density.kind must be one of {DENSITY_KINDS}")
    if dens["kind"] == "gaussian":
        extra = set(dens) - {"kind", "center", "k"}
        if extra or "center" not in dens or "k" not in dens:
            raise _fail("gaussian density needs exactly 'center' and 'k'")
        if len(dens["center"]) != len(lower):
            raise _fail("gaussian center dimension does not match the domain")
        if float(dens["k"]) <= 0:
            raise _fail("gaussian k must be positive")
        dens = {"kind": "gaussian",
                "center": [float(v) for v in dens["center"]], "k": float(dens["k"])}
    else:
        if set(dens) - {"kind"}:
            raise _fail("uniform density accepts no parameters")
        dens = {"kind": "uniform"}

    n = len(targets)
    state = data.get("initial_state", "0" * n)
    if (not isinstance(state, str) or len(state) != n
            or any(ch not in "01" for ch in state)):
        raise _fail(f"initial_state must be a bitstring of length {n}")

    mode_raw = data.get("transport_mode", "route")
    if mode_raw not in TRANSPORT_MODES:
        raise _fail(f"transport_mode must be one of {sorted(TRANSPORT_MODES)}")
    max_iters = int(data.get("max_iters", 50))
    if max_iters < 1:
        raise _fail("max_iters must be >= 1")
    theta = float(data.get("theta", 1.0))
    if not 0.0 < theta <= 1.0:
        raise _fail("theta must lie in (0, 1]")

    return Scenario(
        name=str(data.get("name", default_name)),
        lower=lower, upper=upper, dx=dx, dt=dt, horizon=horizon,
        discount=lam, targets=tuple(targets), cost=cost,
        terminal_prefactor=prefactor, switch_cost_scale=scale, a_max=a_max,
        descent_max_iter=d_iter, descent_tol=d_tol,
        initial_density=dens, initial_state=state,
        coupled=bool(data.get("coupled", False)),
        transport_mode=TRANSPORT_MODES[mode_raw],
        max_iters=max_iters, theta=theta)


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (test1, test2, ...)."""
    from importlib import resources
    base = resources.files("visitsolve") / "scenarios" / f"{name}.json"
    with resources.as_file(base) as p:
        return Path(p)


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise _fail(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise _fail(f"{path.name}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return scenario_from_dict(data, default_name=path.stem)


def normalized_dict(sc: Scenario) -> dict:
    """Canonical dict with all defaults resolved and snapped dx/dt echoed."""
    grid = sc.build_grid()
    return {
        "name": sc.name,
        "domain": {"lower": list(sc.lower), "upper": list(sc.upper)},
        "grid": {"dx": grid.dx, "dt": grid.dt, "horizon": sc.horizon},
        "lambda": sc.discount,
        "targets": [{"center": list(t.center), "radius": t.radius} for t in sc.targets],
        "cost": sc.cost,
        "terminal_prefactor": sc.terminal_prefactor,
        "switch_cost_scale": sc.switch_cost_scale,
        "a_max": sc.a_max,
        "descent": {"max_iter": sc.descent_max_iter, "tol": sc.descent_tol},
        "initial_density": sc.initial_density,
        "initial_state": sc.initial_state,
        "coupled": sc.coupled,
        "transport_mode": sc.transport_mode,
        "max_iters": sc.max_iters,
        "theta": sc.theta,
    }


def canonical_json(sc: Scenario) -> str:
    return json.dumps(normalized_dict(sc), sort_keys=True, indent=2) + "\n"


def scenario_hash(sc: Scenario) -> str:
    return hashlib.sha256(canonical_json(sc).encode()).hexdigest()


def save_normalized(sc: Scenario, path) -> None:
    Path(path).write_text(canonical_json(sc))

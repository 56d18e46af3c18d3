"""Per-state density transport with sinks, sources, and mass bookkeeping.

The push-forward is the explicit scatter scheme: each node's mass follows
its discrete characteristic one step and lands on the surrounding nodes
with multilinear weights, cell volumes converting between density and
mass. Nodes marked by the switch map lose their mass BEFORE the advection
of that step; routed mass reappears at the same node in the destination
state at the next time level, absorbed mass leaves the system. Boundary
cell volumes are halved per touching face (powers of two), so a zero-drift
step reproduces the density bit for bit.

The arrival-time solver rides the same interpolation backward in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ScenarioError
from .grid import Grid
from .hjb import ValueSolution

EXTERIOR = -1  # ledger destination for mass deleted from the system


@dataclass(frozen=True)
class LedgerRow:
    level: int
    from_bits: int
    to_bits: int   # EXTERIOR when absorbed
    mass: float


@dataclass
class MassLedger:
    initial_total: float
    rows: list[LedgerRow] = field(default_factory=list)

    def absorbed_through(self, level: int) -> float:
        return sum(r.mass for r in self.rows if r.to_bits == EXTERIOR and r.level <= level)

    def transferred_through(self, level: int) -> float:
        return sum(r.mass for r in self.rows if r.to_bits != EXTERIOR and r.level <= level)


@dataclass
class DensityEnsemble:
    grid: Grid
    n_states: int
    densities: np.ndarray          # (L, S, *shape) node density values
    ledger: MassLedger

    def state_mass(self, level: int, bits: int) -> float:
        return field_mass(self.grid, self.densities[level, bits])

    def live_mass(self, level: int) -> float:
        return float(sum(self.state_mass(level, p) for p in range(self.n_states)))

    def total_density(self, level: int) -> np.ndarray:
        return self.densities[level].sum(axis=0)

    def total_density_history(self) -> np.ndarray:
        return self.densities.sum(axis=1)

    def conservation_defect(self, rel: bool = True) -> float:
        """Worst over levels of |live + absorbed-so-far - initial|.

        Stored level k holds mass before the removals of step k -> k+1, so
        rows at level k are not yet subtracted at k; the last level stores
        the state after the forced terminal pass, so its own rows count.
        """
        L = self.densities.shape[0]
        init = self.ledger.initial_total
        worst = 0.0
        for k in range(L):
            cutoff = k - 1 if k < L - 1 else k
            expect = init - self.ledger.absorbed_through(cutoff)
            worst = max(worst, abs(self.live_mass(k) - expect))
        return worst / init if rel and init > 0 else worst


def field_mass(grid: Grid, density: np.ndarray) -> float:
    return float(np.sum(density * grid.cell_volumes))


def initialize_density(grid: Grid, fn, *, sink_mask: np.ndarray | None = None,
                       n_quad: int = 10) -> np.ndarray:
    """Cell averages of a density expression, optionally zeroed on a mask."""
    mu = grid.cell_average(fn, n_quad=n_quad)
    if np.any(mu < 0):
        raise ScenarioError("initial density must be nonnegative")
    if sink_mask is not None:
        mu = np.where(sink_mask, 0.0, mu)
    return mu


def discrete_characteristic(grid: Grid, b) -> tuple[np.ndarray, ...]:
    """Forward foot of every node under drift b, clamped to the domain.

    b: tuple/array of per-axis node arrays, or a constant vector.
    """
    coords = grid.node_coords
    feet = []
    for c in range(grid.dim):
        bc = b[c]
        bc = np.asarray(bc, dtype=float)
        if bc.ndim == 0:
            bc = np.full(grid.shape, float(bc))
        ft = coords[c] + grid.dt * bc
        feet.append(np.clip(ft, grid.lower[c], grid.upper[c]))
    return tuple(feet)


def advect_density(grid: Grid, density: np.ndarray, b) -> np.ndarray:
    """One conservative scatter step of a single density field (no sink)."""
    scales = grid.cell_scales
    m_scaled = np.ascontiguousarray((density * scales).ravel())
    feet = discrete_characteristic(grid, b)
    if grid.dim == 1:
        acc = _kernels.scatter_1d(m_scaled, np.ascontiguousarray(feet[0].ravel()),
                                  grid.lower[0], grid.dx, grid.n_cells[0])
    else:
        acc = _kernels.scatter_2d(m_scaled,
                                  np.ascontiguousarray(feet[0].ravel()),
                                  np.ascontiguousarray(feet[1].ravel()),
                                  grid.lower[0], grid.lower[1], grid.dx,
                                  grid.n_cells[0], grid.n_cells[1])
    return np.asarray(acc).reshape(grid.shape) / scales


def push_forward_step(grid: Grid, stack: np.ndarray, level: int, b_states, *,
                      switch_map: np.ndarray | None = None,
                      absorb_to_exterior: bool = False):
    """Advance the (S, *shape) density stack one time step.

    b_states[p] is the per-axis drift of state p (indexable as
    b_states[p][c]); switch_map[p] holds destination bitmasks with -1 for
    free nodes. Returns (new_stack, ledger_rows).
    """
    S = stack.shape[0]
    out = np.zeros_like(stack)
    deposits = np.zeros_like(stack)
    rows: list[LedgerRow] = []
    vol = grid.cell_volumes
    for p in range(S):
        mu = stack[p]
        if switch_map is not None:
            sinks = switch_map[p] >= 0
            if np.any(sinks & (mu > 0)):
                dests = switch_map[p]
                for q in np.unique(dests[sinks & (mu > 0)]):
                    sel = sinks & (dests == q) & (mu > 0)
                    moved = float(np.sum(mu[sel] * vol[sel]))
                    if absorb_to_exterior:
                        rows.append(LedgerRow(level, p, EXTERIOR, moved))
                    else:
                        deposits[int(q)][sel] += mu[sel]
                        rows.append(LedgerRow(level, p, int(q), moved))
                mu = np.where(sinks, 0.0, mu)
        if np.any(mu):
            out[p] = advect_density(grid, mu, tuple(b_states[p][c] for c in range(grid.dim)))
    out += deposits
    return out, rows


def terminal_pass(grid: Grid, stack: np.ndarray, level: int,
                  switch_map: np.ndarray, final_bits: int, *,
                  absorb_to_exterior: bool = False):
    """Forced exit at the horizon: move or delete everything outside p-bar."""
    rows: list[LedgerRow] = []
    vol = grid.cell_volumes
    for p in range(stack.shape[0]):
        if p == final_bits:
            continue
        mu = stack[p]
        moved = float(np.sum(mu * vol))
        if moved == 0.0:
            continue
        if absorb_to_exterior:
            rows.append(LedgerRow(level, p, EXTERIOR, moved))
        else:
            dests = switch_map[p]
            for q in np.unique(dests[mu > 0]):
                sel = (dests == q) & (mu > 0)
                part = float(np.sum(mu[sel] * vol[sel]))
                stack[int(q)][sel] += mu[sel]
                rows.append(LedgerRow(level, p, int(q), part))
        stack[p] = 0.0
    return stack, rows


def run_transport(solution: ValueSolution, mu0: np.ndarray, p0_bits: int, *,
                  absorb_to_exterior: bool = False) -> DensityEnsemble:
    """Transport an initial density through the feedback maps of a solve.

    mu0 is placed in state p0_bits at t=0, advected under the stored
    forward drift, removed at stopping nodes before each step (the k=0
    step handles agents that switch immediately), and forcibly exited at
    the horizon.
    """
    grid, ss = solution.grid, solution.statespace
    L, S = grid.n_levels, ss.n_states
    if not (0 <= p0_bits < S):
        raise ScenarioError(f"initial state {p0_bits} outside the {S}-state space")

    dens = np.zeros((L, S) + grid.shape)
    dens[0, p0_bits] = mu0
    ledger = MassLedger(initial_total=field_mass(grid, mu0))

    for k in range(L - 1):
        stack, rows = push_forward_step(
            grid, dens[k], k, solution.control[k],
            switch_map=solution.switch[k], absorb_to_exterior=absorb_to_exterior)
        dens[k + 1] = stack
        ledger.rows.extend(rows)

    dens[L - 1], rows = terminal_pass(grid, dens[L - 1].copy(), L - 1,
                                      solution.switch[L - 1], ss.final_mask,
                                      absorb_to_exterior=absorb_to_exterior)
    ledger.rows.extend(rows)
    return DensityEnsemble(grid=grid, n_states=S, densities=dens, ledger=ledger)


def run_prescribed(grid: Grid, mu0: np.ndarray, b, n_steps: int | None = None) -> np.ndarray:
    """Sink-free transport under a prescribed drift; returns the history.

    b: constant vector, per-axis node arrays, or callable level -> either.
    """
    steps = grid.n_steps if n_steps is None else n_steps
    hist = np.empty((steps + 1,) + grid.shape)
    hist[0] = mu0
    for k in range(steps):
        bk = b(k) if callable(b) else b
        hist[k + 1] = advect_density(grid, hist[k], bk)
    return hist


def arrival_time_solve(grid: Grid, b, sink_mask: np.ndarray) -> np.ndarray:
    """First time the flow of dx/dt = b enters the sink, per node and level.

    Backward sweep: the horizon layer is T everywhere, sink nodes pin t_k,
    free nodes look up the next level at their characteristic foot; values
    clamp to [t_k, T], so nodes that never reach the sink read T.
    """
    sink_mask = np.asarray(sink_mask, dtype=bool)
    if sink_mask.shape != grid.shape:
        raise ScenarioError("sink mask shape does not match the grid")
    L = grid.n_levels
    T = grid.horizon
    out = np.empty((L,) + grid.shape)
    out[L - 1] = T
    for k in range(L - 2, -1, -1):
        bk = b(k) if callable(b) else b
        feet = discrete_characteristic(grid, bk)
        pts = np.stack([f.ravel() for f in feet], axis=-1)
        vals = grid.interpolate(out[k + 1], pts).reshape(grid.shape)
        t_k = float(grid.times[k])
        vals = np.clip(vals, t_k, T)
        out[k] = np.where(sink_mask, t_k, vals)
    return out

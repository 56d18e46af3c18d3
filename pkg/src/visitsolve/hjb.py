"""Backward semi-Lagrangian solver for the switching variational inequality.

Per backward step, every (node, state) takes the better of two branches:

  continue   Sigma = lam*dt*V(x_i, t_k, p) + min_a { I[V](x_i - dt*a, t_k, p)
                                                     + dt*(rho + |a|^2/2) }
  switch     NV    = min over admissible destinations q of C(x_i, p, q)
                                                     + V(x_i, t_k, q)

with V(., t_{k-1}, p) = min(NV, Sigma). Ties go to the switch branch, and
the final state is pinned at zero. The recorded feedback is the forward
drift (the negation of the raw backward-foot minimizer), which is the field
trajectories and transport integrate; the switch map stores the destination
bitmask or -1. At the last time level every non-final state is marked as
switching to the final state: the terminal penalty is exactly the price of
that forced exit.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .costs import CostModel
from .errors import NumericFailure
from .grid import Grid
from .statespace import StateSpace

DESCENT_MAX_ITER = 50
DESCENT_TOL = 1e-8


def default_control_bound(grid: Grid) -> float:
    """2 * domain diameter / dt, derated by 0.25."""
    diam = float(np.sqrt(sum((u - l) ** 2 for l, u in zip(grid.lower, grid.upper))))
    return 2.0 * diam / grid.dt * 0.25


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("VISITSOLVE_THREADS", "").strip()
    limit = os.cpu_count() or 1
    if cap:
        limit = min(limit, max(1, int(cap)))
    return max(1, min(limit, n_tasks))


@dataclass
class ValueSolution:
    """Values plus feedback maps on the full space-time-state grid.

    values   (L, S, *shape)        V(x_i, t_k, p)
    control  (L, S, dim, *shape)   forward drift; zero where switching
    switch   (L, S, *shape)        destination bitmask, -1 to continue
    """

    grid: Grid
    statespace: StateSpace
    values: np.ndarray
    control: np.ndarray
    switch: np.ndarray
    nonconverged: int = 0
    backend: str = field(default_factory=_kernels.backend_name)

    def stopping_set(self, level: int, bits: int) -> np.ndarray:
        """Boolean node mask where switching is optimal at (t_level, state)."""
        return self.switch[level, bits] >= 0

    def control_field(self, level: int, bits: int) -> np.ndarray:
        return self.control[level, bits]

    def value_slice(self, level: int, bits: int) -> np.ndarray:
        return self.values[level, bits]


def extract_stopping_set(solution: ValueSolution, level: int, bits: int) -> np.ndarray:
    """Node mask where the switch branch won at (t_level, state)."""
    return solution.stopping_set(level, bits)


def _warm_start(v_slice: np.ndarray, dx: float) -> tuple[np.ndarray, ...]:
    """Negated central-difference gradient of a value slice."""
    g = np.gradient(v_slice, dx)
    if v_slice.ndim == 1:
        return (-g,)
    return tuple(-gi for gi in g)


def _continuation_level(grid: Grid, v_slice: np.ndarray, rho: np.ndarray,
                        lam: float, a_max: float, max_iter: int, tol: float):
    """Sigma and the raw minimizer over a whole slice via the kernel backend."""
    v = np.ascontiguousarray(v_slice, dtype=float)
    r = np.ascontiguousarray(rho, dtype=float)
    if grid.dim == 1:
        warm = np.ascontiguousarray(_warm_start(v, grid.dx)[0])
        sig, a, nonconv = _kernels.hjb_quadratic_1d(
            v, r, warm, np.ascontiguousarray(grid.axis_nodes(0)),
            grid.lower[0], grid.upper[0], grid.dx, grid.n_cells[0],
            grid.dt, lam, a_max, max_iter, tol)
        return sig, (a,), nonconv
    w0, w1 = _warm_start(v, grid.dx)
    sig, a0, a1, nonconv = _kernels.hjb_quadratic_2d(
        v, r, np.ascontiguousarray(w0), np.ascontiguousarray(w1),
        np.ascontiguousarray(grid.axis_nodes(0)), np.ascontiguousarray(grid.axis_nodes(1)),
        grid.lower[0], grid.lower[1], grid.upper[0], grid.upper[1],
        grid.dx, grid.n_cells[0], grid.n_cells[1],
        grid.dt, lam, a_max, max_iter, tol)
    return sig, (a0, a1), nonconv


def switching_value_field(grid: Grid, cost: CostModel, values_level: np.ndarray,
                          bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Best switch value and destination per node for one source state.

    values_level is the (S, *shape) stack at a single time level. Ties take
    the smallest destination bitmask (destinations scanned ascending).
    """
    dests = cost.statespace.admissible_masks(bits)
    if not dests:
        raise ValueError("switching undefined for the final state: no destinations")
    best = None
    arg = None
    for q in dests:
        cand = cost.switching_cost_field(grid, bits, q) + values_level[q]
        if best is None:
            best = cand.copy()
            arg = np.full(grid.shape, q, dtype=np.int32)
        else:
            better = cand < best
            best = np.where(better, cand, best)
            arg = np.where(better, q, arg)
    return best, arg


def switching_value(grid: Grid, cost: CostModel, values_level: np.ndarray,
                    bits: int, node_index: tuple) -> tuple[float, int]:
    """Scalar view of switching_value_field at one node."""
    nv, dest = switching_value_field(grid, cost, values_level, bits)
    return float(nv[node_index]), int(dest[node_index])


def minimize_hamiltonian(grid: Grid, v_slice: np.ndarray, x, *, dt: float | None = None,
                         lam: float = 0.0, rho: float = 0.0,
                         dynamics=None, running=None,
                         a_max: float | None = None,
                         max_iter: int = DESCENT_MAX_ITER, tol: float = DESCENT_TOL,
                         warm=None) -> tuple[float, np.ndarray]:
    """Point-wise continuation value: projected descent at a single point.

    The fast per-level path lives in the kernel backends; this generic form
    additionally accepts arbitrary ``dynamics(x, a)`` and ``running(x, a)``
    callables. Returns (Sigma, minimizer).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dt = grid.dt if dt is None else dt
    if a_max is None:
        a_max = default_control_bound(grid)
    f = (lambda xx, aa: aa) if dynamics is None else dynamics
    ell = (lambda xx, aa: rho + 0.5 * float(aa @ aa)) if running is None else running

    def phi(a):
        foot = grid.clamp(x - dt * np.atleast_1d(f(x, a)))
        return float(grid.interpolate(v_slice, foot) + dt * ell(x, a))

    def grad_phi(a, h=1e-7):
        g = np.zeros_like(a)
        for c in range(a.size):
            e = np.zeros_like(a)
            e[c] = h
            g[c] = (phi(a + e) - phi(a - e)) / (2 * h)
        return g / dt

    def clip_ball(a):
        nrm = float(np.sqrt(a @ a))
        return a * (a_max / nrm) if nrm > a_max else a

    if warm is None:
        g = np.gradient(v_slice, grid.dx)
        gs = (g,) if v_slice.ndim == 1 else g
        idx = grid.nearest_node_index(x)
        a = np.array([-gi[idx] for gi in gs])
    else:
        a = np.atleast_1d(np.asarray(warm, dtype=float))
    a = clip_ball(a)
    f_cur = phi(a)
    for _ in range(max_iter):
        d = -grad_phi(a)  # dt-preconditioned residual for the default costs
        eta = 1.0
        accepted = False
        for _h in range(30):
            t = clip_ball(a + eta * d)
            f_t = phi(t)
            if f_t < f_cur:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
        step = float(np.sqrt((t - a) @ (t - a)))
        a, f_cur = t, f_t
        if step < tol:
            break
    v_here = float(grid.interpolate(v_slice, x))
    return lam * dt * v_here + f_cur, a


def backward_solve(grid: Grid, statespace: StateSpace, cost: CostModel, *,
                   a_max: float | None = None,
                   max_iter: int = DESCENT_MAX_ITER, tol: float = DESCENT_TOL,
                   density_totals: np.ndarray | None = None) -> ValueSolution:
    """Full backward sweep over all time levels and states.

    density_totals, when given, is the (L, *shape) per-node total density
    driving the congestion running cost at each level. Reads happen at
    level k, writes at k-1, so states are independent within one step and
    are dispatched to a thread pool (capped by VISITSOLVE_THREADS).
    """
    if a_max is None:
        a_max = default_control_bound(grid)
    L, S = grid.n_levels, statespace.n_states
    final = statespace.final_mask
    lam = cost.discount

    values = np.zeros((L, S) + grid.shape)
    control = np.zeros((L, S, grid.dim) + grid.shape)
    switch = np.full((L, S) + grid.shape, -1, dtype=np.int32)

    for p in range(S):
        psi = cost.terminal_field(grid, p)
        if not np.isfinite(psi).all():
            raise NumericFailure(f"terminal cost not finite for state {p:0{statespace.n_targets}b}",
                                 level=L - 1, state_bits=p)
        values[L - 1, p] = psi
        if p != final:
            switch[L - 1, p] = final  # forced exit at the horizon

    nonconv_total = 0
    non_final = [p for p in range(S) if p != final]
    n_workers = worker_count(len(non_final))

    def step_state(k: int, p: int, rho: np.ndarray):
        sig, a_raw, nonconv = _continuation_level(grid, values[k, p], rho,
                                                  lam, a_max, max_iter, tol)
        nv, dest = switching_value_field(grid, cost, values[k], p)
        stop = nv <= sig
        values[k - 1, p] = np.where(stop, nv, sig)
        for c in range(grid.dim):
            control[k - 1, p, c] = np.where(stop, 0.0, -a_raw[c])
        switch[k - 1, p] = np.where(stop, dest, -1)
        if not np.isfinite(values[k - 1, p]).all():
            raise NumericFailure(
                f"non-finite value at level {k - 1}, state {p:0{statespace.n_targets}b}",
                level=k - 1, state_bits=p)
        return nonconv

    for k in range(L - 1, 0, -1):
        rho = cost.running_cost_field(grid, k, density_totals)
        if n_workers > 1 and len(non_final) > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                for nc in pool.map(lambda p: step_state(k, p, rho), non_final):
                    nonconv_total += nc
        else:
            for p in non_final:
                nonconv_total += step_state(k, p, rho)

    return ValueSolution(grid=grid, statespace=statespace, values=values,
                         control=control, switch=switch, nonconverged=nonconv_total)


def solve_single_state(grid: Grid, terminal: np.ndarray, *, rho=None,
                       lam: float = 0.0, a_max: float | None = None,
                       max_iter: int = DESCENT_MAX_ITER, tol: float = DESCENT_TOL):
    """Pure continuation sweep (no switching): the underlying control solver.

    rho may be None, a static node array, or a callable level -> array.
    Returns (values (L, *shape), control (L, dim, *shape)) with the control
    again stored as the forward drift.
    """
    if a_max is None:
        a_max = default_control_bound(grid)
    L = grid.n_levels
    values = np.zeros((L,) + grid.shape)
    control = np.zeros((L, grid.dim) + grid.shape)
    values[L - 1] = terminal
    if not np.isfinite(terminal).all():
        raise NumericFailure("terminal cost not finite", level=L - 1)

    def rho_at(k: int) -> np.ndarray:
        if rho is None:
            return np.zeros(grid.shape)
        if callable(rho):
            return rho(k)
        return rho

    nonconv_total = 0
    for k in range(L - 1, 0, -1):
        sig, a_raw, nonconv = _continuation_level(grid, values[k], rho_at(k),
                                                  lam, a_max, max_iter, tol)
        nonconv_total += nonconv
        values[k - 1] = sig
        for c in range(grid.dim):
            control[k - 1, c] = -a_raw[c]
        if not np.isfinite(sig).all():
            raise NumericFailure(f"non-finite value at level {k - 1}", level=k - 1)
    return values, control


def verify_invariants(solution: ValueSolution, cost: CostModel, *,
                      tol: float = 1e-10, interior_only: bool = False,
                      density_totals: np.ndarray | None = None) -> dict:
    """Re-derive every backward update from the stored values and compare.

    Checks, per level and state: V(t_{k-1}) == min(NV(t_k), Sigma(t_k)) to
    ``tol``; branch consistency with the stored switch map; V >= 0; the
    final state pinned at zero. Returns a report dict with the worst
    defects; raises nothing.
    """
    grid, ss = solution.grid, solution.statespace
    L, S = grid.n_levels, ss.n_states
    final = ss.final_mask
    a_max = default_control_bound(grid)
    sl = tuple(slice(1, -1) for _ in range(grid.dim)) if interior_only else tuple(
        slice(None) for _ in range(grid.dim))

    worst_vi = 0.0
    worst_branch = 0.0
    violations = 0
    for k in range(L - 1, 0, -1):
        rho = cost.running_cost_field(grid, k, density_totals)
        for p in range(S):
            if p == final:
                continue
            sig, _, _ = _continuation_level(grid, solution.values[k, p], rho,
                                            cost.discount, a_max, DESCENT_MAX_ITER, DESCENT_TOL)
            nv, _ = switching_value_field(grid, cost, solution.values[k], p)
            recomputed = np.minimum(nv, sig)
            gap = np.abs(recomputed - solution.values[k - 1, p])[sl]
            worst_vi = max(worst_vi, float(gap.max()))
            if float(gap.max()) > tol:
                violations += 1
            stored_stop = solution.switch[k - 1, p] >= 0
            branch_gap = np.abs(np.where(stored_stop, nv, sig) - solution.values[k - 1, p])[sl]
            worst_branch = max(worst_branch, float(branch_gap.max()))
            if float(branch_gap.max()) > tol:
                violations += 1
    v_min = float(solution.values.min())
    final_max = float(np.abs(solution.values[:, final]).max())
    if v_min < -tol:
        violations += 1
    if final_max > 0.0:
        violations += 1
    return {
        "worst_update_gap": worst_vi,
        "worst_branch_gap": worst_branch,
        "min_value": v_min,
        "final_state_max_abs": final_max,
        "violations": violations,
        "tolerance": tol,
    }

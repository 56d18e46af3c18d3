"""Fixed-point coupling between the value solver and density transport.

The running cost reads the crowd through the per-node total density summed
over every memory state (everyone contributes to congestion, switched or
not). Iterate 1 solves the system at zero density and transports through
it; every later iterate feeds the previous density totals into a fresh
value solve. The iteration error E(z) is the sup over space-time nodes of
the change in total density between consecutive iterates, and the loop
stops when it falls under half a cell width (or the explicit threshold).
A damping factor theta blends each new density into the running one;
theta = 1 is the plain undamped alternation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostModel
from .grid import Grid
from .hjb import ValueSolution, backward_solve
from .statespace import StateSpace
from .transport import DensityEnsemble, run_transport


def congestion_running_cost(total_density_at_node: float, a) -> float:
    """exp of the all-state density total plus the quadratic motion cost."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    return float(np.exp(total_density_at_node) + 0.5 * (a @ a))


@dataclass
class MfgResult:
    value: ValueSolution
    density: DensityEnsemble
    error_history: list[float]   # E(2), E(3), ... in iterate order
    iterations: int              # coupled solves performed
    converged: bool
    threshold: float


def fixed_point_solve(grid: Grid, statespace: StateSpace, cost: CostModel,
                      mu0: np.ndarray, p0_bits: int, *,
                      absorb_to_exterior: bool = False,
                      max_iters: int = 50, theta: float = 1.0,
                      threshold: float | None = None,
                      a_max: float | None = None,
                      callback=None) -> MfgResult:
    """Alternate value solves and transports to a self-consistent density.

    max_iters caps the coupled solves (iterations beyond the warm start).
    callback, when given, receives (z, value, ensemble, error_or_None)
    after each transport; the warm start is z=1 with error None.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    if threshold is None:
        threshold = grid.dx / 2.0

    value = backward_solve(grid, statespace, cost, a_max=a_max)
    ensemble = run_transport(value, mu0, p0_bits, absorb_to_exterior=absorb_to_exterior)
    totals = ensemble.total_density_history()
    if callback is not None:
        callback(1, value, ensemble, None)

    history: list[float] = []
    converged = False
    iterations = 0
    for z in range(2, max_iters + 2):
        value = backward_solve(grid, statespace, cost, a_max=a_max,
                               density_totals=totals)
        ensemble = run_transport(value, mu0, p0_bits,
                                 absorb_to_exterior=absorb_to_exterior)
        iterations = z - 1
        new_totals = ensemble.total_density_history()
        if theta < 1.0:
            new_totals = theta * new_totals + (1.0 - theta) * totals
        err = float(np.max(np.abs(new_totals - totals)))
        history.append(err)
        totals = new_totals
        if callback is not None:
            callback(z, value, ensemble, err)
        if err < threshold:
            converged = True
            break

    return MfgResult(value=value, density=ensemble, error_history=history,
                     iterations=iterations, converged=converged, threshold=threshold)

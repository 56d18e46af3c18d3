"""Cost structure: targets, switching costs, terminal penalties, running cost.

All built-in problems share the quadratic control penalty |a|^2/2 with
isotropic dynamics f(x, a, p) = a; the optional congestion term adds
exp(total density) through the running-cost field hook. Target distances
are set distances: a point target contributes |x - c|, a closed ball
max(0, |x - c| - r).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .statespace import StateSpace


@dataclass(frozen=True)
class Target:
    center: tuple[float, ...]
    radius: float = 0.0

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError("target radius must be nonnegative")

    def distance(self, x: np.ndarray) -> np.ndarray:
        """Euclidean distance from x (..., dim) to the target set."""
        x = np.asarray(x, dtype=float)
        d = np.sqrt(np.sum((x - np.asarray(self.center)) ** 2, axis=-1))
        if self.radius > 0:
            d = np.maximum(d - self.radius, 0.0)
        return d

    def center_distance(self, x: np.ndarray) -> np.ndarray:
        """Euclidean distance from x (..., dim) to the target center."""
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.sum((x - np.asarray(self.center)) ** 2, axis=-1))


@dataclass
class CostModel:
    """Switching / terminal / running costs over a state space.

    switching cost   C(x, p, q) = scale * sum of set distances over flipped bits
    terminal cost    psi_p(x)   = prefactor * sum of center distances over unvisited bits
    running cost     rho(x, t) + |a|^2 / 2   (rho = 0, or congestion, or custom)

    Switching measures the shortfall to the target set (zero on contact, so
    visiting a ball target is a free switch); the terminal penalty always
    charges the full distance to the center.
    """

    statespace: StateSpace
    targets: list[Target]
    switch_scale: float = 1.0
    terminal_prefactor: float = 1.0
    discount: float = 0.0
    congestion: bool = False
    _dist_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if len(self.targets) != self.statespace.n_targets:
            raise ValueError("number of targets must match the state space")
        if self.switch_scale < 0 or self.terminal_prefactor < 0 or self.discount < 0:
            raise ValueError("cost coefficients must be nonnegative")

    def target_distances(self, grid: Grid) -> np.ndarray:
        """(N, *grid.shape) stack of distances to each target set."""
        key = id(grid)
        if key not in self._dist_cache:
            pts = np.stack(grid.node_coords, axis=-1) if grid.dim > 1 else grid.node_coords[0][:, None]
            self._dist_cache[key] = np.stack([t.distance(pts) for t in self.targets])
        return self._dist_cache[key]

    def switching_cost_field(self, grid: Grid, bits_from: int, bits_to: int) -> np.ndarray:
        """C(., p, q) on the grid; q need not be admissible (callers filter)."""
        D = self.target_distances(grid)
        flips = self.statespace.flipped_targets(bits_from, bits_to)
        out = np.zeros(grid.shape)
        for j in flips:
            out = out + D[j - 1]
        return self.switch_scale * out

    def switching_cost(self, x, bits_from: int, bits_to: int) -> float:
        flips = self.statespace.flipped_targets(bits_from, bits_to)
        return float(self.switch_scale * sum(self.targets[j - 1].distance(np.asarray(x, dtype=float))
                                             for j in flips))

    def center_distances(self, grid: Grid) -> np.ndarray:
        """(N, *grid.shape) stack of distances to each target center."""
        key = ("center", id(grid))
        if key not in self._dist_cache:
            pts = np.stack(grid.node_coords, axis=-1) if grid.dim > 1 else grid.node_coords[0][:, None]
            self._dist_cache[key] = np.stack([t.center_distance(pts) for t in self.targets])
        return self._dist_cache[key]

    def terminal_field(self, grid: Grid, bits: int) -> np.ndarray:
        """psi_p on the grid: prefactor times summed center distance of unvisited targets."""
        D = self.center_distances(grid)
        flips = self.statespace.flipped_targets(bits, self.statespace.final_mask)
        out = np.zeros(grid.shape)
        for j in flips:
            out = out + D[j - 1]
        return self.terminal_prefactor * out

    def terminal_cost(self, x, bits: int) -> float:
        flips = self.statespace.flipped_targets(bits, self.statespace.final_mask)
        return float(self.terminal_prefactor * sum(self.targets[j - 1].center_distance(np.asarray(x, dtype=float))
                                                   for j in flips))

    def running_cost_field(self, grid: Grid, level: int, density_totals=None) -> np.ndarray:
        """State-dependent part rho(x, t_k) of the running cost.

        With congestion on, rho = exp(local crowd mass at t_k), where the
        crowd mass at a node is the total density value times the cell
        volume.  Using occupancy mass rather than the raw density value
        keeps the exponent bounded when mass concentrates near a switch
        boundary, so the coupled fixed point stays contractive as the grid
        is refined.  The quadratic control part |a|^2/2 is added inside the
        minimization kernels.
        """
        if self.congestion and density_totals is not None:
            return np.exp(density_totals[level] * grid.cell_volumes)
        if self.congestion:
            # coupled cost evaluated without a density context: empty crowd
            return np.ones(grid.shape)
        return np.zeros(grid.shape)

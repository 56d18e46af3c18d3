"""Uniform space-time grids on a box, cell averages, and interpolation.

Nodes are x_i = lower + i*dx per axis, times t_k = k*dt. Fields over the
grid are stored row-major over axes (axis 0 outermost) so that flattened
slices have a fixed canonical ordering for exports.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels

_REL_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    dim: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    dx: float
    dt: float
    horizon: float
    n_cells: tuple[int, ...]
    n_steps: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"only 1-D and 2-D grids are supported, got dim={self.dim}")
        if len(self.lower) != self.dim or len(self.upper) != self.dim or len(self.n_cells) != self.dim:
            raise ValueError("lower/upper/n_cells must all have length dim")
        if self.dx <= 0 or self.dt <= 0 or self.horizon <= 0:
            raise ValueError("dx, dt and horizon must be positive")
        for ax in range(self.dim):
            length = self.upper[ax] - self.lower[ax]
            if length <= 0:
                raise ValueError(f"axis {ax}: upper must exceed lower")
            if self.n_cells[ax] < 1:
                raise ValueError(f"axis {ax}: need at least one cell")
            if abs(self.n_cells[ax] * self.dx - length) > _REL_TOL * max(1.0, abs(length)):
                raise ValueError(f"axis {ax}: domain length {length} is not a multiple of dx={self.dx}")
        if self.n_steps < 1:
            raise ValueError("need at least one time step")
        if abs(self.n_steps * self.dt - self.horizon) > _REL_TOL * max(1.0, self.horizon):
            raise ValueError(f"horizon {self.horizon} is not a multiple of dt={self.dt}")

    @classmethod
    def from_steps(cls, lower, upper, dx: float, dt: float, horizon: float) -> "Grid":
        """Build a grid, snapping dx/dt to the nearest exact divisors.

        Requested steps that do not divide the box or the horizon are
        replaced by length/round(length/step); all axes must then agree on
        a single dx.
        """
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        dim = len(lower)
        if dx <= 0 or dt <= 0 or horizon <= 0:
            raise ValueError("dx, dt and horizon must be positive")
        n_cells = []
        for ax in range(dim):
            length = upper[ax] - lower[ax]
            if length <= 0:
                raise ValueError(f"axis {ax}: upper must exceed lower")
            n = max(1, round(length / dx))
            n_cells.append(n)
        dx_snap = (upper[0] - lower[0]) / n_cells[0]
        for ax in range(1, dim):
            dx_ax = (upper[ax] - lower[ax]) / n_cells[ax]
            if abs(dx_ax - dx_snap) > _REL_TOL * dx_snap:
                raise ValueError("axes disagree on a common dx after snapping")
        n_steps = max(1, round(horizon / dt))
        dt_snap = horizon / n_steps
        return cls(dim=dim, lower=lower, upper=upper, dx=dx_snap, dt=dt_snap,
                   horizon=horizon, n_cells=tuple(n_cells), n_steps=n_steps)

    # ---- shape helpers -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        """Nodes per axis."""
        return tuple(n + 1 for n in self.n_cells)

    @property
    def n_nodes(self) -> int:
        out = 1
        for n in self.shape:
            out *= n
        return out

    @property
    def n_levels(self) -> int:
        return self.n_steps + 1

    @cached_property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_levels) * self.dt
        t[-1] = self.horizon
        return t

    def axis_nodes(self, ax: int) -> np.ndarray:
        return self.lower[ax] + np.arange(self.n_cells[ax] + 1) * self.dx

    @cached_property
    def node_coords(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcast to the full node shape."""
        axes = [self.axis_nodes(ax) for ax in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def nodes_flat(self) -> np.ndarray:
        """(n_nodes, dim) array of node coordinates in canonical order."""
        return np.stack([c.ravel() for c in self.node_coords], axis=-1)

    # ---- geometry ------------------------------------------------------

    def clamp(self, x) -> np.ndarray:
        """Componentwise projection onto the box."""
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.clip(x, lo, hi)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= np.asarray(self.lower) - 1e-12) and
                    np.all(x <= np.asarray(self.upper) + 1e-12))

    @cached_property
    def cell_scales(self) -> np.ndarray:
        """|E_i intersect box| / dx^dim per node; exactly 1, 1/2 or 1/4."""
        scale = np.ones(self.shape)
        for ax in range(self.dim):
            edge = np.ones(self.n_cells[ax] + 1)
            edge[0] = 0.5
            edge[-1] = 0.5
            shape = [1] * self.dim
            shape[ax] = -1
            scale = scale * edge.reshape(shape)
        return scale

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        return self.cell_scales * self.dx**self.dim

    def cell_average(self, fn, n_quad: int = 10) -> np.ndarray:
        """Average of ``fn`` over each node's cell (truncated at the box).

        ``fn`` maps an (..., dim) coordinate array to values; a tensor
        midpoint rule with ``n_quad`` points per axis is used.
        """
        offsets = (np.arange(n_quad) + 0.5) / n_quad  # midpoints of [0,1] subintervals
        axes_pts = []
        for ax in range(self.dim):
            nodes = self.axis_nodes(ax)
            lo = np.maximum(nodes - self.dx / 2, self.lower[ax])
            hi = np.minimum(nodes + self.dx / 2, self.upper[ax])
            # (n_nodes_ax, n_quad) quadrature abscissae per truncated cell
            axes_pts.append(lo[:, None] + offsets[None, :] * (hi - lo)[:, None])
        if self.dim == 1:
            vals = fn(axes_pts[0][..., None])
            return vals.mean(axis=-1)
        px = axes_pts[0]  # (n0, q)
        py = axes_pts[1]  # (n1, q)
        X = px[:, None, :, None]
        Y = py[None, :, None, :]
        pts = np.stack(np.broadcast_arrays(X, Y), axis=-1)
        vals = fn(pts)
        return vals.mean(axis=(-1, -2))

    # ---- interpolation -------------------------------------------------

    def interpolate(self, field: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation of a node field at arbitrary points.

        Points are clamped to the box first; exact on nodes; weights are a
        convex combination so the result is monotone and L-infinity stable.
        """
        points = np.asarray(points, dtype=float)
        if self.dim == 1:
            pts = np.clip(points[..., 0] if points.ndim > 1 else points,
                          self.lower[0], self.upper[0])
            return _kernels.interp_1d(np.ascontiguousarray(field, dtype=float),
                                      np.ascontiguousarray(pts, dtype=float).ravel(),
                                      self.lower[0], self.dx, self.n_cells[0]).reshape(pts.shape)
        single = points.ndim == 1
        pts = points.reshape(-1, 2)
        px = np.clip(pts[:, 0], self.lower[0], self.upper[0])
        py = np.clip(pts[:, 1], self.lower[1], self.upper[1])
        out = _kernels.interp_2d(np.ascontiguousarray(field, dtype=float),
                                 np.ascontiguousarray(px), np.ascontiguousarray(py),
                                 self.lower[0], self.lower[1], self.dx,
                                 self.n_cells[0], self.n_cells[1])
        return out[0] if single else out.reshape(points.shape[:-1])

    def nearest_node_index(self, x) -> tuple[int, ...]:
        x = np.asarray(x, dtype=float)
        idx = []
        for ax in range(self.dim):
            i = int(round((float(x[ax]) - self.lower[ax]) / self.dx))
            idx.append(min(max(i, 0), self.n_cells[ax]))
        return tuple(idx)

"""Pure numpy kernels.

The compiled backend mirrors these routines operation for operation; any
change here must be replicated there. Foot location uses an index snap of
1e-9 (in cell units) so that node-exact queries produce exact nodal
weights, which keeps zero-velocity transport bit-identical.
"""

from __future__ import annotations

import numpy as np

SNAP = 1e-9
MAX_HALVINGS = 30


def _locate(x: np.ndarray, lower: float, dx: float, n_cells: int):
    """Cell index and weight per query point. Returns (i, w) with
    0 <= i <= n_cells-1 and w in [0,1]; the upper domain edge is
    represented as (n_cells-1, 1.0)."""
    s = (x - lower) / dx
    s = np.clip(s, 0.0, float(n_cells))
    i = np.floor(s).astype(np.intp)
    w = s - i
    w = np.where(w < SNAP, 0.0, w)
    hi = w > 1.0 - SNAP
    i = np.where(hi, i + 1, i)
    w = np.where(hi, 0.0, w)
    top = i >= n_cells
    i = np.where(top, n_cells - 1, i)
    w = np.where(top, 1.0, w)
    return i, w


def interp_1d(F: np.ndarray, pts: np.ndarray, lower: float, dx: float, n_cells: int) -> np.ndarray:
    i, w = _locate(pts, lower, dx, n_cells)
    return (1.0 - w) * F[i] + w * F[i + 1]


def interp_2d(F: np.ndarray, px: np.ndarray, py: np.ndarray,
              lower0: float, lower1: float, dx: float,
              c0: int, c1: int) -> np.ndarray:
    i0, w0 = _locate(px, lower0, dx, c0)
    i1, w1 = _locate(py, lower1, dx, c1)
    v00 = F[i0, i1]
    v01 = F[i0, i1 + 1]
    v10 = F[i0 + 1, i1]
    v11 = F[i0 + 1, i1 + 1]
    return (1.0 - w0) * ((1.0 - w1) * v00 + w1 * v01) + w0 * ((1.0 - w1) * v10 + w1 * v11)


def _interp_grad_2d(F, px, py, lower0, lower1, dx, c0, c1):
    """Value and the bilinear surface gradient at each point's cell."""
    i0, w0 = _locate(px, lower0, dx, c0)
    i1, w1 = _locate(py, lower1, dx, c1)
    v00 = F[i0, i1]
    v01 = F[i0, i1 + 1]
    v10 = F[i0 + 1, i1]
    v11 = F[i0 + 1, i1 + 1]
    val = (1.0 - w0) * ((1.0 - w1) * v00 + w1 * v01) + w0 * ((1.0 - w1) * v10 + w1 * v11)
    gx = ((1.0 - w1) * (v10 - v00) + w1 * (v11 - v01)) / dx
    gy = ((1.0 - w0) * (v01 - v00) + w0 * (v11 - v10)) / dx
    return val, gx, gy


def _interp_grad_1d(F, pts, lower, dx, n_cells):
    i, w = _locate(pts, lower, dx, n_cells)
    val = (1.0 - w) * F[i] + w * F[i + 1]
    g = (F[i + 1] - F[i]) / dx
    return val, g


def hjb_quadratic_1d(V, rho, warm, xs, lower, upper, dx, n_cells,
                     dt, lam, a_max, max_iter, tol):
    """Per-node minimization of I[V](x - dt*a) + dt*(rho + a^2/2).

    Projected descent with the dt-preconditioned residual direction and a
    step-halving line search; see the package docs for the exact recipe.
    Returns (sigma, a_star, n_nonconverged).
    """
    x = xs
    a = np.clip(warm, -a_max, a_max)

    def value(ctrl):
        foot = x - dt * ctrl
        foot = np.minimum(np.maximum(foot, lower), upper)
        v = interp_1d(V, foot, lower, dx, n_cells)
        return v + dt * (rho + 0.5 * (ctrl * ctrl))

    def grad(ctrl):
        foot = x - dt * ctrl
        foot = np.minimum(np.maximum(foot, lower), upper)
        _, g = _interp_grad_1d(V, foot, lower, dx, n_cells)
        return g

    f_cur = value(a)
    stopped = np.zeros(a.shape, dtype=bool)
    for _ in range(max_iter):
        active = ~stopped
        if not active.any():
            break
        g = a - grad(a)
        eta = np.ones_like(a)
        accepted = np.zeros(a.shape, dtype=bool)
        t_keep = a.copy()
        f_keep = f_cur.copy()
        for _h in range(MAX_HALVINGS):
            todo = active & ~accepted
            if not todo.any():
                break
            t = a - eta * g
            t = np.clip(t, -a_max, a_max)
            f_t = value(t)
            ok = todo & (f_t < f_cur)
            t_keep = np.where(ok, t, t_keep)
            f_keep = np.where(ok, f_t, f_keep)
            accepted = accepted | ok
            eta = np.where(active & ~accepted, eta * 0.5, eta)
        newly_stuck = active & ~accepted
        step = np.abs(t_keep - a)
        a = np.where(accepted, t_keep, a)
        f_cur = np.where(accepted, f_keep, f_cur)
        stopped = stopped | newly_stuck | (accepted & (step < tol))
    n_nonconv = int(np.count_nonzero(~stopped))
    sigma = lam * dt * V + f_cur
    return sigma, a, n_nonconv


def hjb_quadratic_2d(V, rho, warm0, warm1, xs0, xs1, lower0, lower1,
                     upper0, upper1, dx, c0, c1, dt, lam, a_max, max_iter, tol):
    """2-D twin of hjb_quadratic_1d; control clipped to the a_max ball.

    All arrays are flattened internally; outputs keep the (n0, n1) node
    shape. Returns (sigma, a0, a1, n_nonconverged).
    """
    shape = V.shape
    x0 = np.broadcast_to(xs0[:, None], shape).ravel()
    x1 = np.broadcast_to(xs1[None, :], shape).ravel()
    rho_f = np.broadcast_to(rho, shape).ravel()
    a0 = warm0.ravel().copy()
    a1 = warm1.ravel().copy()

    def clip_ball(b0, b1):
        nrm = np.sqrt(b0 * b0 + b1 * b1)
        big = nrm > a_max
        sc = np.where(big, a_max / np.where(nrm > 0, nrm, 1.0), 1.0)
        return b0 * sc, b1 * sc

    def value(b0, b1):
        f0 = x0 - dt * b0
        f1 = x1 - dt * b1
        f0 = np.minimum(np.maximum(f0, lower0), upper0)
        f1 = np.minimum(np.maximum(f1, lower1), upper1)
        v = interp_2d(V, f0, f1, lower0, lower1, dx, c0, c1)
        return v + dt * (rho_f + 0.5 * (b0 * b0 + b1 * b1))

    def grad(b0, b1):
        f0 = x0 - dt * b0
        f1 = x1 - dt * b1
        f0 = np.minimum(np.maximum(f0, lower0), upper0)
        f1 = np.minimum(np.maximum(f1, lower1), upper1)
        _, gx, gy = _interp_grad_2d(V, f0, f1, lower0, lower1, dx, c0, c1)
        return gx, gy

    a0, a1 = clip_ball(a0, a1)
    f_cur = value(a0, a1)
    stopped = np.zeros(a0.shape, dtype=bool)
    for _ in range(max_iter):
        active = ~stopped
        if not active.any():
            break
        gx, gy = grad(a0, a1)
        g0 = a0 - gx
        g1 = a1 - gy
        eta = np.ones_like(a0)
        accepted = np.zeros(a0.shape, dtype=bool)
        t0_keep = a0.copy()
        t1_keep = a1.copy()
        f_keep = f_cur.copy()
        for _h in range(MAX_HALVINGS):
            todo = active & ~accepted
            if not todo.any():
                break
            t0 = a0 - eta * g0
            t1 = a1 - eta * g1
            t0, t1 = clip_ball(t0, t1)
            f_t = value(t0, t1)
            ok = todo & (f_t < f_cur)
            t0_keep = np.where(ok, t0, t0_keep)
            t1_keep = np.where(ok, t1, t1_keep)
            f_keep = np.where(ok, f_t, f_keep)
            accepted = accepted | ok
            eta = np.where(active & ~accepted, eta * 0.5, eta)
        newly_stuck = active & ~accepted
        d0 = t0_keep - a0
        d1 = t1_keep - a1
        step = np.sqrt(d0 * d0 + d1 * d1)
        a0 = np.where(accepted, t0_keep, a0)
        a1 = np.where(accepted, t1_keep, a1)
        f_cur = np.where(accepted, f_keep, f_cur)
        stopped = stopped | newly_stuck | (accepted & (step < tol))
    n_nonconv = int(np.count_nonzero(~stopped))
    sigma = (lam * dt * V.ravel() + f_cur).reshape(shape)
    return sigma, a0.reshape(shape), a1.reshape(shape), n_nonconv


def scatter_1d(m_scaled, feet, lower, dx, n_cells):
    """Deposit scaled masses at each foot's surrounding nodes."""
    i, w = _locate(feet, lower, dx, n_cells)
    acc = np.zeros(n_cells + 1)
    np.add.at(acc, i, (1.0 - w) * m_scaled)
    np.add.at(acc, i + 1, w * m_scaled)
    return acc


def scatter_2d(m_scaled, fx, fy, lower0, lower1, dx, c0, c1):
    """2-D scatter: bilinear weights around each foot, summed per node."""
    i0, w0 = _locate(fx, lower0, dx, c0)
    i1, w1 = _locate(fy, lower1, dx, c1)
    acc = np.zeros((c0 + 1, c1 + 1))
    np.add.at(acc, (i0, i1), (1.0 - w0) * (1.0 - w1) * m_scaled)
    np.add.at(acc, (i0, i1 + 1), (1.0 - w0) * w1 * m_scaled)
    np.add.at(acc, (i0 + 1, i1), w0 * (1.0 - w1) * m_scaled)
    np.add.at(acc, (i0 + 1, i1 + 1), w0 * w1 * m_scaled)
    return acc

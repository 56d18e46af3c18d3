# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels. Operation-for-operation mirror of reference.py;
keep the two in sync. Built with -ffp-contract=off so per-node results
match the numpy backend to accumulation-order roundoff."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor, sqrt

cnp.import_array()

cdef double SNAP = 1e-9      # index-snap threshold, must match reference.py
cdef int MAX_HALVINGS = 30   # line-search cap, must match reference.py


cdef inline void _locate(double x, double lower, double dx, Py_ssize_t n_cells,
                         Py_ssize_t* i_out, double* w_out) nogil:
    cdef double s = (x - lower) / dx
    cdef Py_ssize_t i
    cdef double w
    if s <= 0.0:
        i_out[0] = 0
        w_out[0] = 0.0
        return
    if s >= <double> n_cells:
        i_out[0] = n_cells - 1
        w_out[0] = 1.0
        return
    i = <Py_ssize_t> floor(s)
    w = s - <double> i
    if w < SNAP:
        w = 0.0
    elif w > 1.0 - SNAP:
        i += 1
        w = 0.0
        if i >= n_cells:
            i_out[0] = n_cells - 1
            w_out[0] = 1.0
            return
    i_out[0] = i
    w_out[0] = w


cdef inline double _interp1(const double[::1] F, double x, double lower,
                            double dx, Py_ssize_t n_cells) nogil:
    cdef Py_ssize_t i
    cdef double w
    _locate(x, lower, dx, n_cells, &i, &w)
    return (1.0 - w) * F[i] + w * F[i + 1]


cdef inline double _interp2(const double[:, ::1] F, double x, double y,
                            double lower0, double lower1, double dx,
                            Py_ssize_t c0, Py_ssize_t c1) nogil:
    cdef Py_ssize_t i0, i1
    cdef double w0, w1, v00, v01, v10, v11
    _locate(x, lower0, dx, c0, &i0, &w0)
    _locate(y, lower1, dx, c1, &i1, &w1)
    v00 = F[i0, i1]
    v01 = F[i0, i1 + 1]
    v10 = F[i0 + 1, i1]
    v11 = F[i0 + 1, i1 + 1]
    return (1.0 - w0) * ((1.0 - w1) * v00 + w1 * v01) + w0 * ((1.0 - w1) * v10 + w1 * v11)


cdef inline void _interp_grad2(const double[:, ::1] F, double x, double y,
                               double lower0, double lower1, double dx,
                               Py_ssize_t c0, Py_ssize_t c1,
                               double* val, double* gx, double* gy) nogil:
    cdef Py_ssize_t i0, i1
    cdef double w0, w1, v00, v01, v10, v11
    _locate(x, lower0, dx, c0, &i0, &w0)
    _locate(y, lower1, dx, c1, &i1, &w1)
    v00 = F[i0, i1]
    v01 = F[i0, i1 + 1]
    v10 = F[i0 + 1, i1]
    v11 = F[i0 + 1, i1 + 1]
    val[0] = (1.0 - w0) * ((1.0 - w1) * v00 + w1 * v01) + w0 * ((1.0 - w1) * v10 + w1 * v11)
    gx[0] = ((1.0 - w1) * (v10 - v00) + w1 * (v11 - v01)) / dx
    gy[0] = ((1.0 - w0) * (v01 - v00) + w0 * (v11 - v10)) / dx


cdef inline void _interp_grad1(const double[::1] F, double x, double lower,
                               double dx, Py_ssize_t n_cells,
                               double* val, double* g) nogil:
    cdef Py_ssize_t i
    cdef double w
    _locate(x, lower, dx, n_cells, &i, &w)
    val[0] = (1.0 - w) * F[i] + w * F[i + 1]
    g[0] = (F[i + 1] - F[i]) / dx


def interp_1d(double[::1] F, double[::1] pts, double lower, double dx, Py_ssize_t n_cells):
    cdef Py_ssize_t n = pts.shape[0], k
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for k in range(n):
            out[k] = _interp1(F, pts[k], lower, dx, n_cells)
    return out_arr


def interp_2d(double[:, ::1] F, double[::1] px, double[::1] py,
              double lower0, double lower1, double dx, Py_ssize_t c0, Py_ssize_t c1):
    cdef Py_ssize_t n = px.shape[0], k
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for k in range(n):
            out[k] = _interp2(F, px[k], py[k], lower0, lower1, dx, c0, c1)
    return out_arr


def hjb_quadratic_1d(double[::1] V, double[::1] rho, double[::1] warm,
                     double[::1] xs, double lower, double upper, double dx,
                     Py_ssize_t n_cells, double dt, double lam, double a_max,
                     int max_iter, double tol):
    cdef Py_ssize_t n = V.shape[0], k
    cdef int it, h, nonconv = 0
    cdef bint stopped, accepted
    cdef double a, f_cur, foot, g, gval, eta, t, f_t, step, x
    sig_arr = np.empty(n)
    act_arr = np.empty(n)
    cdef double[::1] sig = sig_arr
    cdef double[::1] act = act_arr
    with nogil:
        for k in range(n):
            x = xs[k]
            a = warm[k]
            if a > a_max:
                a = a_max
            if a < -a_max:
                a = -a_max
            foot = x - dt * a
            if foot < lower:
                foot = lower
            if foot > upper:
                foot = upper
            f_cur = _interp1(V, foot, lower, dx, n_cells) + dt * (rho[k] + 0.5 * (a * a))
            stopped = False
            for it in range(max_iter):
                foot = x - dt * a
                if foot < lower:
                    foot = lower
                if foot > upper:
                    foot = upper
                _interp_grad1(V, foot, lower, dx, n_cells, &gval, &g)
                g = a - g
                eta = 1.0
                accepted = False
                t = a
                f_t = f_cur
                for h in range(MAX_HALVINGS):
                    t = a - eta * g
                    if t > a_max:
                        t = a_max
                    if t < -a_max:
                        t = -a_max
                    foot = x - dt * t
                    if foot < lower:
                        foot = lower
                    if foot > upper:
                        foot = upper
                    f_t = _interp1(V, foot, lower, dx, n_cells) + dt * (rho[k] + 0.5 * (t * t))
                    if f_t < f_cur:
                        accepted = True
                        break
                    eta = eta * 0.5
                if not accepted:
                    stopped = True
                    break
                step = fabs(t - a)
                a = t
                f_cur = f_t
                if step < tol:
                    stopped = True
                    break
            if not stopped:
                nonconv += 1
            sig[k] = lam * dt * V[k] + f_cur
            act[k] = a
    return sig_arr, act_arr, nonconv


def hjb_quadratic_2d(double[:, ::1] V, double[:, ::1] rho,
                     double[:, ::1] warm0, double[:, ::1] warm1,
                     double[::1] xs0, double[::1] xs1,
                     double lower0, double lower1, double upper0, double upper1,
                     double dx, Py_ssize_t c0, Py_ssize_t c1,
                     double dt, double lam, double a_max, int max_iter, double tol):
    cdef Py_ssize_t n0 = V.shape[0], n1 = V.shape[1], i0, i1
    cdef int it, h, nonconv = 0
    cdef bint stopped, accepted
    cdef double a0, a1, f_cur, f0, f1, gx, gy, g0, g1, gval
    cdef double eta, t0, t1, f_t, d0, d1, step, x0, x1, nrm, sc
    sig_arr = np.empty((n0, n1))
    a0_arr = np.empty((n0, n1))
    a1_arr = np.empty((n0, n1))
    cdef double[:, ::1] sig = sig_arr
    cdef double[:, ::1] oa0 = a0_arr
    cdef double[:, ::1] oa1 = a1_arr
    with nogil:
        for i0 in range(n0):
            x0 = xs0[i0]
            for i1 in range(n1):
                x1 = xs1[i1]
                a0 = warm0[i0, i1]
                a1 = warm1[i0, i1]
                nrm = sqrt(a0 * a0 + a1 * a1)
                if nrm > a_max:
                    sc = a_max / nrm
                    a0 = a0 * sc
                    a1 = a1 * sc
                f0 = x0 - dt * a0
                f1 = x1 - dt * a1
                if f0 < lower0:
                    f0 = lower0
                if f0 > upper0:
                    f0 = upper0
                if f1 < lower1:
                    f1 = lower1
                if f1 > upper1:
                    f1 = upper1
                f_cur = _interp2(V, f0, f1, lower0, lower1, dx, c0, c1) \
                    + dt * (rho[i0, i1] + 0.5 * (a0 * a0 + a1 * a1))
                stopped = False
                for it in range(max_iter):
                    f0 = x0 - dt * a0
                    f1 = x1 - dt * a1
                    if f0 < lower0:
                        f0 = lower0
                    if f0 > upper0:
                        f0 = upper0
                    if f1 < lower1:
                        f1 = lower1
                    if f1 > upper1:
                        f1 = upper1
                    _interp_grad2(V, f0, f1, lower0, lower1, dx, c0, c1, &gval, &gx, &gy)
                    g0 = a0 - gx
                    g1 = a1 - gy
                    eta = 1.0
                    accepted = False
                    t0 = a0
                    t1 = a1
                    f_t = f_cur
                    for h in range(MAX_HALVINGS):
                        t0 = a0 - eta * g0
                        t1 = a1 - eta * g1
                        nrm = sqrt(t0 * t0 + t1 * t1)
                        if nrm > a_max:
                            sc = a_max / nrm
                            t0 = t0 * sc
                            t1 = t1 * sc
                        f0 = x0 - dt * t0
                        f1 = x1 - dt * t1
                        if f0 < lower0:
                            f0 = lower0
                        if f0 > upper0:
                            f0 = upper0
                        if f1 < lower1:
                            f1 = lower1
                        if f1 > upper1:
                            f1 = upper1
                        f_t = _interp2(V, f0, f1, lower0, lower1, dx, c0, c1) \
                            + dt * (rho[i0, i1] + 0.5 * (t0 * t0 + t1 * t1))
                        if f_t < f_cur:
                            accepted = True
                            break
                        eta = eta * 0.5
                    if not accepted:
                        stopped = True
                        break
                    d0 = t0 - a0
                    d1 = t1 - a1
                    step = sqrt(d0 * d0 + d1 * d1)
                    a0 = t0
                    a1 = t1
                    f_cur = f_t
                    if step < tol:
                        stopped = True
                        break
                if not stopped:
                    nonconv += 1
                sig[i0, i1] = lam * dt * V[i0, i1] + f_cur
                oa0[i0, i1] = a0
                oa1[i0, i1] = a1
    return sig_arr, a0_arr, a1_arr, nonconv


def scatter_1d(double[::1] m_scaled, double[::1] feet, double lower, double dx,
               Py_ssize_t n_cells):
    cdef Py_ssize_t n = feet.shape[0], k, i
    cdef double w, m
    acc_arr = np.zeros(n_cells + 1)
    cdef double[::1] acc = acc_arr
    with nogil:
        for k in range(n):
            m = m_scaled[k]
            _locate(feet[k], lower, dx, n_cells, &i, &w)
            acc[i] += (1.0 - w) * m
            acc[i + 1] += w * m
    return acc_arr


def scatter_2d(double[::1] m_scaled, double[::1] fx, double[::1] fy,
               double lower0, double lower1, double dx, Py_ssize_t c0, Py_ssize_t c1):
    cdef Py_ssize_t n = fx.shape[0], k, i0, i1
    cdef double w0, w1, m
    acc_arr = np.zeros((c0 + 1, c1 + 1))
    cdef double[:, ::1] acc = acc_arr
    with nogil:
        for k in range(n):
            m = m_scaled[k]
            _locate(fx[k], lower0, dx, c0, &i0, &w0)
            _locate(fy[k], lower1, dx, c1, &i1, &w1)
            acc[i0, i1] += (1.0 - w0) * (1.0 - w1) * m
            acc[i0, i1 + 1] += (1.0 - w0) * w1 * m
            acc[i0 + 1, i1] += w0 * (1.0 - w1) * m
            acc[i0 + 1, i1 + 1] += w0 * w1 * m
    return acc_arr

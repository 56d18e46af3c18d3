"""Compiled and reference kernels must agree to accumulation roundoff."""

from __future__ import annotations

import numpy as np
import pytest

from visitsolve import available_backends, backend_name
from visitsolve._kernels import reference

fast = pytest.importorskip(
    "visitsolve._kernels._fast", reason="compiled extension not built"
)

TOL = 1e-12


def test_compiled_backend_is_built_and_selected():
    assert "fast" in available_backends()
    assert backend_name() in ("fast", "reference")


def _random_field(rng, shape):
    return np.ascontiguousarray(rng.standard_normal(shape))


def test_interp_agreement():
    rng = np.random.default_rng(11)
    F1 = _random_field(rng, (41,))
    pts = rng.uniform(-1.0, 1.0, size=400)
    a = reference.interp_1d(F1, pts, -1.0, 0.05, 40)
    b = np.asarray(fast.interp_1d(F1, pts, -1.0, 0.05, 40))
    assert np.max(np.abs(a - b)) <= TOL

    F2 = _random_field(rng, (21, 21))
    px = rng.uniform(-1.0, 1.0, size=500)
    py = rng.uniform(-1.0, 1.0, size=500)
    a = reference.interp_2d(F2, px, py, -1.0, -1.0, 0.1, 20, 20)
    b = np.asarray(fast.interp_2d(F2, px, py, -1.0, -1.0, 0.1, 20, 20))
    assert np.max(np.abs(a - b)) <= TOL


def test_hjb_minimization_agreement():
    rng = np.random.default_rng(5)
    n = 20
    xs = np.linspace(-1.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    V = np.ascontiguousarray((X - 0.2) ** 2 + 0.5 * (Y + 0.1) ** 2)
    rho = np.ascontiguousarray(np.abs(rng.standard_normal(V.shape)))
    warm0 = np.zeros_like(V)
    warm1 = np.zeros_like(V)
    args = (V, rho, warm0, warm1,
            np.ascontiguousarray(xs), np.ascontiguousarray(xs),
            -1.0, -1.0, 1.0, 1.0, 2.0 / n, n, n, 0.05, 0.0, 4.0, 50, 1e-8)
    val_a, a0_a, a1_a, _ = reference.hjb_quadratic_2d(*args)
    val_b, a0_b, a1_b, _ = fast.hjb_quadratic_2d(*args)
    assert np.max(np.abs(np.asarray(val_a) - np.asarray(val_b))) <= TOL
    assert np.max(np.abs(np.asarray(a0_a) - np.asarray(a0_b))) <= TOL
    assert np.max(np.abs(np.asarray(a1_a) - np.asarray(a1_b))) <= TOL


def test_hjb_1d_agreement():
    n = 40
    xs = np.linspace(-2.0, 2.0, n + 1)
    V = np.ascontiguousarray(0.7 * xs**2)
    rho = np.ascontiguousarray(xs**2)
    warm = np.zeros_like(V)
    args = (V, rho, warm, xs, -2.0, 2.0, 4.0 / n, n, 0.01, 0.0, 8.0, 50, 1e-8)
    val_a, ctl_a, _ = reference.hjb_quadratic_1d(*args)
    val_b, ctl_b, _ = fast.hjb_quadratic_1d(*args)
    assert np.max(np.abs(np.asarray(val_a) - np.asarray(val_b))) <= TOL
    assert np.max(np.abs(np.asarray(ctl_a) - np.asarray(ctl_b))) <= TOL


def test_scatter_agreement_and_conservation():
    rng = np.random.default_rng(23)
    n = 25
    m = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=(n + 1) * (n + 1)))
    fx = rng.uniform(-1.0, 1.0, size=m.size)
    fy = rng.uniform(-1.0, 1.0, size=m.size)
    a = np.asarray(reference.scatter_2d(m, fx, fy, -1.0, -1.0, 2.0 / n, n, n))
    b = np.asarray(fast.scatter_2d(m, fx, fy, -1.0, -1.0, 2.0 / n, n, n))
    assert np.max(np.abs(a - b)) <= TOL
    assert a.sum() == pytest.approx(m.sum(), rel=1e-13)

    m1 = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=n + 1))
    f1 = rng.uniform(-1.0, 1.0, size=n + 1)
    a1 = np.asarray(reference.scatter_1d(m1, f1, -1.0, 2.0 / n, n))
    b1 = np.asarray(fast.scatter_1d(m1, f1, -1.0, 2.0 / n, n))
    assert np.max(np.abs(a1 - b1)) <= TOL

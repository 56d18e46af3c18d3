"""Grid geometry, interpolation, and cell averaging."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from visitsolve import Grid


def test_from_steps_snaps_to_integer_counts():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.066, 0.033, 0.5)
    assert g.n_cells == (30, 30)
    assert g.dx == pytest.approx(2.0 / 30)
    assert g.n_steps == 15
    assert g.dt == pytest.approx(0.5 / 15)
    assert g.n_levels == 16
    assert len(g.times) == 16
    assert np.allclose(np.diff(g.times), g.dt)


def test_exact_steps_pass_through():
    g = Grid.from_steps((-1.0,), (1.0,), 0.01, 0.005, 1.0)
    assert g.n_cells == (200,) and g.n_steps == 200
    assert g.dx == pytest.approx(0.01) and g.dt == pytest.approx(0.005)


def test_clamp_and_contains():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.1, 0.05, 1.0)
    assert tuple(g.clamp((1.3, 0.0))) == (1.0, 0.0)
    assert tuple(g.clamp((-2.0, 0.4))) == (-1.0, 0.4)
    assert g.contains((0.0, 0.0))
    assert not g.contains((1.0001, 0.0))


def test_nearest_node_index():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.1, 0.05, 1.0)
    assert g.nearest_node_index((0.0, 0.0)) == (10, 10)
    assert g.nearest_node_index((0.96, -1.0)) == (20, 0)


def test_interpolation_exact_on_affine_fields():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.1, 0.05, 1.0)
    X, Y = np.meshgrid(g.axis_nodes(0), g.axis_nodes(1), indexing="ij")
    field = 2.0 * X - 3.0 * Y + 0.25
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.0, 1.0, size=(200, 2))
    got = g.interpolate(field, pts)
    want = 2.0 * pts[:, 0] - 3.0 * pts[:, 1] + 0.25
    assert np.max(np.abs(got - want)) < 1e-12


def test_interpolation_reproduces_node_values():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.1, 0.05, 1.0)
    rng = np.random.default_rng(3)
    field = rng.standard_normal(g.shape)
    pts = g.nodes_flat
    got = g.interpolate(field, pts)
    assert np.array_equal(got.reshape(g.shape), field)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_interpolation_stays_within_field_range(data):
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.2, 0.1, 1.0)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    field = rng.standard_normal(g.shape)
    pts = rng.uniform(-1.0, 1.0, size=(50, 2))
    got = g.interpolate(field, pts)
    assert np.all(got <= field.max() + 1e-12)
    assert np.all(got >= field.min() - 1e-12)


def test_cell_volumes_boundary_fractions():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.1, 0.05, 1.0)
    v = g.cell_volumes
    assert v[5, 5] == pytest.approx(0.01)
    assert v[0, 5] == pytest.approx(0.005)
    assert v[0, 0] == pytest.approx(0.0025)
    # scales are exact powers of two so scaled mass scatter is lossless
    assert set(np.unique(g.cell_scales)) == {0.25, 0.5, 1.0}
    assert v.sum() == pytest.approx(4.0)


def test_cell_average_exact_for_polynomials_up_to_degree_one():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.1, 0.05, 1.0)
    const = g.cell_average(lambda x: np.ones(x.shape[:-1]))
    assert np.max(np.abs(const - 1.0)) < 1e-14
    lin = g.cell_average(lambda x: x[..., 0] + 0.5 * x[..., 1])
    X, Y = np.meshgrid(g.axis_nodes(0), g.axis_nodes(1), indexing="ij")
    # interior cells are centered on their node; boundary half-cells are not
    assert np.max(np.abs(lin - (X + 0.5 * Y))[1:-1, 1:-1]) < 1e-13
    assert lin[0, 5] == pytest.approx(X[0, 5] + g.dx / 4 + 0.5 * Y[0, 5])


def test_cell_average_matches_midpoint_tensor_oracle():
    g = Grid.from_steps((-1.0, -1.0), (1.0, 1.0), 0.04, 0.02, 0.26)
    fn = lambda x: np.exp(-8.0 * np.sum(x * x, axis=-1))
    got = g.cell_average(fn, n_quad=10)

    # independent midpoint tensor rule on the peak cell
    i = g.nearest_node_index((0.0, 0.0))
    x0, y0 = g.axis_nodes(0)[i[0]], g.axis_nodes(1)[i[1]]
    h = g.dx / 2
    q = (np.arange(10) + 0.5) / 10
    xs = x0 - h + 2 * h * q
    ys = y0 - h + 2 * h * q
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    oracle = float(np.mean(np.exp(-8.0 * (XX**2 + YY**2))))
    assert abs(got[i] - oracle) < 1e-6


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid.from_steps((-1.0,), (1.0,), -0.1, 0.05, 1.0)
    with pytest.raises(ValueError):
        Grid.from_steps((1.0,), (-1.0,), 0.1, 0.05, 1.0)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ttheat import fg_ops, grid
from ttheat.errors import InvalidInputError

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def g16():
    return grid.scenario_grid("regular", 16)


def inner_cells(ax):
    sl = [slice(None)] * 3
    sl[ax] = slice(1, -1)
    return tuple(sl)


def test_deriv1_exact_on_linears_and_quadratics(g16):
    u = g16.sample(lambda x, y, z: x)
    assert np.allclose(fg_ops.deriv1_cell(u, g16, "x").data, 1.0, rtol=0, atol=1e-12)
    assert np.allclose(fg_ops.deriv1_cell(u, g16, "y").data, 0.0, rtol=0, atol=1e-12)
    xc, _, _ = g16.cell_mesh()
    d = fg_ops.deriv1_cell(g16.sample(lambda x, y, z: x * x), g16, 0).data
    assert np.max(np.abs(d - 2 * xc)) < 1e-12


def test_deriv2_exact_on_quadratics_and_cubics(g16):
    xc, yc, _ = g16.cell_mesh()
    d = fg_ops.deriv2_cell(g16.sample(lambda x, y, z: x ** 2), g16, "x").data
    assert np.max(np.abs(d - 2)[inner_cells(0)]) < 1e-10
    d = fg_ops.deriv2_cell(g16.sample(lambda x, y, z: y ** 3), g16, "y").data
    assert np.max(np.abs(d - 6 * yc)[inner_cells(1)]) < 1e-10
    # the outermost layer along the axis is left at zero
    assert np.all(d[:, 0, :] == 0) and np.all(d[:, -1, :] == 0)


def test_deriv2_annihilates_transverse_functions(g16):
    u = g16.sample(lambda x, y, z: np.sin(3 * y) * np.exp(z))
    assert np.max(np.abs(fg_ops.deriv2_cell(u, g16, "x").data)) < 1e-10


def test_mixed_derivatives(g16):
    u = g16.sample(lambda x, y, z: x * y)
    m = fg_ops.mixed2_cell(u, g16, ("x", "y")).data
    core = m[1:-1, 1:-1, :]
    assert np.allclose(core, 1.0, rtol=0, atol=1e-11)
    assert np.all(m[0] == 0) and np.all(m[:, -1] == 0)
    u2 = g16.sample(lambda x, y, z: x * x)
    assert np.max(np.abs(fg_ops.mixed2_cell(u2, g16, ("x", "y")).data)) < 1e-11
    r = g16.sample(lambda x, y, z: np.sin(x + 2 * y) * z)
    assert np.array_equal(fg_ops.mixed2_cell(r, g16, ("x", "y")).data,
                          fg_ops.mixed2_cell(r, g16, ("y", "x")).data)
    with pytest.raises(InvalidInputError):
        fg_ops.mixed2_cell(r, g16, ("z", "z"))


def test_mixed_derivative_converges():
    errs = []
    for nc in (16, 32, 64):
        g = grid.scenario_grid("regular", nc)
        u = g.sample(lambda x, y, z: np.sin(TWO_PI * x) * np.sin(TWO_PI * y) + 0 * z)
        xc, yc, _ = g.cell_mesh()
        ref = TWO_PI ** 2 * np.cos(TWO_PI * xc) * np.cos(TWO_PI * yc)
        m = fg_ops.mixed2_cell(u, g, ("x", "y")).data
        errs.append(np.max(np.abs(m - ref)[1:-1, 1:-1, :]))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8)


def test_laplacian_polynomials(g16):
    lap = fg_ops.laplacian_cell(g16.sample(lambda x, y, z: x * x + y * y + z * z), g16).data
    assert np.max(np.abs(lap - 6)[1:-1, 1:-1, 1:-1]) < 1e-10
    I = g16.interior
    lv = fg_ops.laplacian_vertex(g16.sample(lambda x, y, z: x * x + y * y + z * z), g16).data
    assert np.max(np.abs(lv[I] - 6)) < 1e-10
    assert np.max(np.abs(fg_ops.laplacian_vertex(g16.sample(lambda x, y, z: x * y * z), g16).data)) < 1e-11


def test_deriv1_second_order():
    errs = []
    for nc in (20, 40, 80):
        g = grid.scenario_grid("regular", nc)
        u = g.sample(lambda x, y, z: np.sin(TWO_PI * x) * np.sin(TWO_PI * y) * np.sin(TWO_PI * z))
        xc, yc, zc = g.cell_mesh()
        ref = TWO_PI * np.cos(TWO_PI * xc) * np.sin(TWO_PI * yc) * np.sin(TWO_PI * zc)
        errs.append(np.max(np.abs(fg_ops.deriv1_cell(u, g, "x").data - ref)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5))


def test_interp_vertex(g16):
    c = fg_ops.interp_vertex(np.full(g16.cell_shape, 3.0), g16).data
    I = g16.interior
    assert np.allclose(c[I], 3.0)
    assert np.all(c[0] == 0)
    xc, _, _ = g16.cell_mesh()
    xv, _, _ = g16.vertex_mesh()
    assert np.allclose(fg_ops.interp_vertex(xc, g16).data[I], xv[I])


def test_remapped_with_unit_metric_matches_regular():
    reg = grid.scenario_grid("regular", 12)
    ax = grid.remapped_axis(0.0, 1.0, 12, 2, lambda x: np.ones_like(np.asarray(x, dtype=float)))
    rem = grid.Grid3((ax, ax, ax))
    u = reg.sample(lambda x, y, z: np.sin(3 * x) * np.cos(2 * y) * np.exp(z))
    for op in (lambda v, g: fg_ops.deriv1_cell(v, g, 1), lambda v, g: fg_ops.deriv2_cell(v, g, 2),
               fg_ops.laplacian_vertex):
        a, b = op(u, reg).data, op(u, rem).data
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_operators_are_linear(seed, a, b):
    g = grid.scenario_grid("variable", 6)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2,) + g.vertex_shape)
    for op in (fg_ops.laplacian_vertex, lambda w, g: fg_ops.deriv2_cell(w, g, "y")):
        lhs = op(a * u + b * v, g).data
        rhs = a * op(u, g).data + b * op(v, g).data
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))


def test_set_dirichlet(g16):
    rng = np.random.default_rng(0)
    u = rng.standard_normal(g16.vertex_shape)
    I = g16.interior
    z = fg_ops.set_dirichlet(u, g16, lambda x, y, z, t: 0 * x, 0.0).data
    assert np.array_equal(z[I], u[I])
    assert np.all(z[g16.interior_indicator() == 0] == 0)

    def u1(x, y, z, t):
        return np.sin(TWO_PI * x) * np.sin(TWO_PI * y) * np.sin(TWO_PI * z) * (1 + t)

    once = fg_ops.set_dirichlet(u, g16, u1, 0.3).data
    twice = fg_ops.set_dirichlet(once, g16, u1, 0.3).data
    assert np.array_equal(once, twice)
    b = g16.interior_indicator() == 0
    assert np.allclose(once[b], g16.sample(u1, 0.3)[b])


def test_shape_and_ghost_checks(g16):
    with pytest.raises(InvalidInputError):
        fg_ops.deriv1_cell(np.zeros((3, 3, 3)), g16, 0)
    with pytest.raises(InvalidInputError):
        fg_ops.deriv1_cell(np.zeros(g16.vertex_shape), g16, "w")
    g0 = grid.Grid3((grid.regular_axis(0, 1, 8, 0),) * 3)
    with pytest.raises(InvalidInputError):
        fg_ops.deriv2_cell(np.zeros(g0.vertex_shape), g0, 0)

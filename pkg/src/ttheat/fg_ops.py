"""Full-grid dual-grid difference operators.

Vertex fields have the grid's vertex shape, cell fields its cell shape,
ghost layers included.  Second derivatives are zero on the outermost cell
layer along their axis, where the stencil does not fit.  The vertex
interpolation writes zeros on boundary vertex layers; those are owned by
:func:`set_dirichlet`.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import InvalidInputError
from .grid import Grid3
from .tt_core import DenseField3

AXES = {"x": 0, "y": 1, "z": 2, "X": 0, "Y": 1, "Z": 2, 0: 0, 1: 1, 2: 2}


def axis_index(axis) -> int:
    try:
        return AXES[axis]
    except (KeyError, TypeError):
        raise InvalidInputError(f"unknown axis {axis!r}") from None


def _vertex_data(uV, g: Grid3) -> np.ndarray:
    a = uV.data if isinstance(uV, DenseField3) else np.asarray(uV, dtype=float)
    if a.shape != g.vertex_shape:
        raise InvalidInputError(f"vertex field shape {a.shape} does not match grid {g.vertex_shape}")
    return a


def _cell_data(uC, g: Grid3) -> np.ndarray:
    a = uC.data if isinstance(uC, DenseField3) else np.asarray(uC, dtype=float)
    if a.shape != g.cell_shape:
        raise InvalidInputError(f"cell field shape {a.shape} does not match grid {g.cell_shape}")
    return a


def _along(v: np.ndarray, ax: int) -> np.ndarray:
    shape = [1, 1, 1]
    shape[ax] = v.size
    return v.reshape(shape)


def _pair_average(a: np.ndarray, ax: int) -> np.ndarray:
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[ax] = slice(None, -1)
    hi[ax] = slice(1, None)
    return 0.5 * (a[tuple(lo)] + a[tuple(hi)])


def _transverse_average(a: np.ndarray, ax: int) -> np.ndarray:
    for other in range(3):
        if other != ax:
            a = _pair_average(a, other)
    return a


def _first_derivative(u: np.ndarray, g: Grid3, ax: int) -> np.ndarray:
    scale = g.axes[ax].derivative_scale()
    return _transverse_average(np.diff(u, axis=ax) / _along(scale, ax), ax)


def _half_sum(d: np.ndarray, g: Grid3, ax: int) -> np.ndarray:
    """Second derivative from a cell first derivative along ``ax``."""
    right, left = g.axes[ax].half_sum_denominators(g.second_derivative)
    out = np.zeros_like(d)
    d = np.moveaxis(d, ax, 0)
    o = np.moveaxis(out, ax, 0)
    dr = (d[2:] - d[1:-1]) / right[1:-1, None, None]
    dl = (d[1:-1] - d[:-2]) / left[1:-1, None, None]
    o[1:-1] = 0.5 * (dr + dl)
    return out


def _require_ghosts(g: Grid3, n: int):
    if g.n_ghost < n:
        raise InvalidInputError(f"operator needs at least {n} ghost frame(s), grid has {g.n_ghost}")


def deriv1_cell(uV, g: Grid3, axis) -> DenseField3:
    ax = axis_index(axis)
    u = _vertex_data(uV, g)
    return DenseField3._wrap(_first_derivative(u, g, ax), "cell")


def deriv2_cell(uV, g: Grid3, axis) -> DenseField3:
    ax = axis_index(axis)
    _require_ghosts(g, 1)
    u = _vertex_data(uV, g)
    if g.axes[ax].kind == "regular":
        h = g.axes[ax].cell_steps[0]
        um = np.moveaxis(u, ax, 0)
        st = (um[3:] - um[2:-1] - um[1:-2] + um[:-3]) / (2.0 * h * h)
        full = np.zeros((um.shape[0] - 1,) + um.shape[1:])
        full[1:-1] = st
        out = _transverse_average(np.moveaxis(full, 0, ax), ax)
    else:
        out = _half_sum(_first_derivative(u, g, ax), g, ax)
    return DenseField3._wrap(out, "cell")


def _center_span(g: Grid3, ax: int) -> np.ndarray:
    """Distance between the centers of cells ``i-1`` and ``i+1`` (0 at the ends)."""
    axis = g.axes[ax]
    span = np.zeros(axis.nc)
    if axis.kind == "remapped":
        mv = axis.metric_at_vertices
        span[1:-1] = (mv[1:-2] + mv[2:-1]) * axis.cell_steps.mean()
    else:
        c = axis.centers
        span[1:-1] = c[2:] - c[:-2]
    return span


def _central_difference(d: np.ndarray, g: Grid3, ax: int) -> np.ndarray:
    span = _center_span(g, ax)
    out = np.zeros_like(d)
    dm = np.moveaxis(d, ax, 0)
    om = np.moveaxis(out, ax, 0)
    om[1:-1] = (dm[2:] - dm[:-2]) / span[1:-1, None, None]
    return out


def mixed2_cell(uV, g: Grid3, axes) -> DenseField3:
    """Symmetrized mixed second derivative; zero where a stencil is cut."""
    a, b = (axis_index(x) for x in axes)
    if a == b:
        raise InvalidInputError("mixed2_cell needs two distinct axes; use deriv2_cell")
    _require_ghosts(g, 1)
    a, b = sorted((a, b))
    u = _vertex_data(uV, g)
    da = _first_derivative(u, g, a)
    db = _first_derivative(u, g, b)
    out = 0.5 * (_central_difference(da, g, b) + _central_difference(db, g, a))
    sl = [slice(None)] * 3
    for ax in (a, b):
        cut = list(sl)
        cut[ax] = [0, -1]
        out[tuple(cut)] = 0.0
    return DenseField3._wrap(out, "cell")


def laplacian_cell(uV, g: Grid3) -> DenseField3:
    u = _vertex_data(uV, g)
    out = deriv2_cell(u, g, 0).data
    out += deriv2_cell(u, g, 1).data
    out += deriv2_cell(u, g, 2).data
    return DenseField3._wrap(out, "cell")


def interp_vertex(uC, g: Grid3) -> DenseField3:
    """Weighted 8-cell average at interior vertices, zeros on boundary layers."""
    a = _cell_data(uC, g)
    for ax, axis in enumerate(g.axes):
        wl, wr = axis.interp_weights(g.interpolation)
        wl = wl * axis.interior_mask()
        wr = wr * axis.interior_mask()
        am = np.moveaxis(a, ax, 0)
        out = np.zeros((am.shape[0] + 1,) + am.shape[1:])
        out[1:-1] = wl[1:-1, None, None] * am[:-1] + wr[1:-1, None, None] * am[1:]
        a = np.moveaxis(out, 0, ax)
    return DenseField3._wrap(np.ascontiguousarray(a), "vertex")


def laplacian_vertex(uV, g: Grid3) -> DenseField3:
    return interp_vertex(laplacian_cell(uV, g), g)


def boundary_field(g: Grid3, gfun: Callable, t: float) -> np.ndarray:
    """``gfun`` sampled on every vertex at time ``t``."""
    return g.sample(gfun, t)


def set_dirichlet(uV, g: Grid3, gfun: Callable, t: float) -> DenseField3:
    u = _vertex_data(uV, g)
    m = g.interior_indicator()
    out = u * m + boundary_field(g, gfun, t) * (1.0 - m)
    return DenseField3._wrap(out, "vertex")


def set_dirichlet_values(uV, g: Grid3, boundary: np.ndarray) -> DenseField3:
    """Like :func:`set_dirichlet` with the boundary data already sampled."""
    u = _vertex_data(uV, g)
    b = _vertex_data(boundary, g)
    m = g.interior_indicator()
    return DenseField3._wrap(u * m + b * (1.0 - m), "vertex")


def mask_interior(uV, g: Grid3) -> DenseField3:
    return DenseField3._wrap(_vertex_data(uV, g) * g.interior_indicator(), "vertex")

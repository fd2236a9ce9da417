"""Dual-grid difference operators acting directly on tensor-train cores.

Every operator here is a tensor product of 1D operations, so it acts on the
three cores independently: the differentiated axis gets a difference
quotient of consecutive slices, the other two get pair averages.  None of
them changes the TT ranks; only the sums in the Laplacian and the Dirichlet
injection call :func:`round`.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from . import tt_core
from .errors import InvalidInputError
from .fg_ops import _center_span, axis_index
from .grid import Grid3
from .tt_core import TTTensor3


def _check(uTT: TTTensor3, shape, what: str):
    if not isinstance(uTT, TTTensor3):
        raise InvalidInputError(f"{what} expects a TTTensor3")
    if uTT.mode_sizes != tuple(shape):
        raise InvalidInputError(f"{what}: mode sizes {uTT.mode_sizes} do not match grid {tuple(shape)}")


def _avg(core: np.ndarray) -> np.ndarray:
    return 0.5 * (core[:, :-1, :] + core[:, 1:, :])


def _diff(core: np.ndarray, scale: np.ndarray) -> np.ndarray:
    return (core[:, 1:, :] - core[:, :-1, :]) / scale[None, :, None]


def _axis_deriv2_core(core: np.ndarray, g: Grid3, ax: int) -> np.ndarray:
    axis = g.axes[ax]
    out = np.zeros((core.shape[0], axis.nc, core.shape[2]))
    if axis.kind == "regular":
        h = axis.cell_steps[0]
        out[:, 1:-1, :] = (core[:, 3:, :] - core[:, 2:-1, :] - core[:, 1:-2, :] + core[:, :-3, :]) / (2.0 * h * h)
    else:
        d = _diff(core, axis.derivative_scale())
        right, left = axis.half_sum_denominators(g.second_derivative)
        out[:, 1:-1, :] = 0.5 * ((d[:, 2:, :] - d[:, 1:-1, :]) / right[None, 1:-1, None]
                                 + (d[:, 1:-1, :] - d[:, :-2, :]) / left[None, 1:-1, None])
    return out


def tt_deriv1_cell(uTT: TTTensor3, g: Grid3, axis) -> TTTensor3:
    ax = axis_index(axis)
    _check(uTT, g.vertex_shape, "tt_deriv1_cell")
    cores = [
        _diff(c, g.axes[ax].derivative_scale()) if k == ax else _avg(c)
        for k, c in enumerate(uTT.cores)
    ]
    return TTTensor3._wrap(cores, "cell")


def tt_deriv2_cell(uTT: TTTensor3, g: Grid3, axis) -> TTTensor3:
    ax = axis_index(axis)
    _check(uTT, g.vertex_shape, "tt_deriv2_cell")
    if g.n_ghost < 1:
        raise InvalidInputError(f"operator needs at least 1 ghost frame, grid has {g.n_ghost}")
    cores = [
        _axis_deriv2_core(c, g, ax) if k == ax else _avg(c)
        for k, c in enumerate(uTT.cores)
    ]
    return TTTensor3._wrap(cores, "cell")


def _central_core(core: np.ndarray, span: np.ndarray) -> np.ndarray:
    out = np.zeros_like(core)
    out[:, 1:-1, :] = (core[:, 2:, :] - core[:, :-2, :]) / span[None, 1:-1, None]
    return out


def tt_mixed2_cell(uTT: TTTensor3, g: Grid3, axes, eps: Optional[float] = None) -> TTTensor3:
    """Symmetrized mixed derivative; ranks double unless ``eps`` rounds them."""
    a, b = sorted(axis_index(x) for x in axes)
    if a == b:
        raise InvalidInputError("tt_mixed2_cell needs two distinct axes; use tt_deriv2_cell")
    _check(uTT, g.vertex_shape, "tt_mixed2_cell")
    if g.n_ghost < 1:
        raise InvalidInputError(f"operator needs at least 1 ghost frame, grid has {g.n_ghost}")
    terms = []
    for d_ax, c_ax in ((a, b), (b, a)):
        cores = []
        for k, c in enumerate(uTT.cores):
            if k == d_ax:
                c = _diff(c, g.axes[k].derivative_scale())
            else:
                c = _avg(c)
            if k == c_ax:
                c = _central_core(c, _center_span(g, k))
            if k in (a, b):
                c = c.copy()
                c[:, [0, -1], :] = 0.0
            cores.append(c)
        terms.append(TTTensor3._wrap(cores, "cell"))
    return _maybe_round(tt_core.scale(tt_core.add(*terms), 0.5), eps)


def _maybe_round(A: TTTensor3, eps: Optional[float]) -> TTTensor3:
    return A if eps is None else tt_core.round(A, eps)


def tt_laplacian_cell(uTT: TTTensor3, g: Grid3, eps: Optional[float] = 0.0) -> TTTensor3:
    """Sum of the three second derivatives, rounded at ``eps`` (None skips rounding)."""
    s = tt_core.add(tt_core.add(tt_deriv2_cell(uTT, g, 0), tt_deriv2_cell(uTT, g, 1)),
                    tt_deriv2_cell(uTT, g, 2))
    return _maybe_round(s, eps)


def interior_mask(g: Grid3):
    return g.masks()


def tt_interp_vertex(uCTT: TTTensor3, g: Grid3) -> TTTensor3:
    _check(uCTT, g.cell_shape, "tt_interp_vertex")
    cores = []
    for core, axis in zip(uCTT.cores, g.axes):
        wl, wr = axis.interp_weights(g.interpolation)
        m = axis.interior_mask()
        wl = (wl * m)[1:-1]
        wr = (wr * m)[1:-1]
        out = np.zeros((core.shape[0], axis.nv, core.shape[2]))
        out[:, 1:-1, :] = wl[None, :, None] * core[:, :-1, :] + wr[None, :, None] * core[:, 1:, :]
        cores.append(out)
    return TTTensor3._wrap(cores, "vertex")


def tt_laplacian_vertex(uTT: TTTensor3, g: Grid3, eps: Optional[float] = 0.0) -> TTTensor3:
    return tt_interp_vertex(tt_laplacian_cell(uTT, g, eps), g)


def tt_mask_interior(uTT: TTTensor3, g: Grid3) -> TTTensor3:
    _check(uTT, g.vertex_shape, "tt_mask_interior")
    return tt_core.hadamard_rank1(uTT, *g.masks())


def tt_set_dirichlet(uTT: TTTensor3, g: Grid3, gTT: TTTensor3, eps: Optional[float] = 0.0) -> TTTensor3:
    """Interior values from ``uTT``, boundary layers from ``gTT``."""
    _check(uTT, g.vertex_shape, "tt_set_dirichlet")
    _check(gTT, g.vertex_shape, "tt_set_dirichlet")
    m = g.masks()
    boundary = tt_core.add(gTT, tt_core.scale(tt_core.hadamard_rank1(gTT, *m), -1.0))
    return _maybe_round(tt_core.add(tt_core.hadamard_rank1(uTT, *m), boundary), eps)

"""1D factor matrices of the vertex Laplacian, stored as bands.

On a tensor-product grid the vertex Laplacian factorizes per axis:

    Lap = V_x (x) M_y (x) M_z + M_x (x) V_y (x) M_z + M_x (x) M_y (x) V_z

where ``V = W D2`` (interpolation after the second derivative) has five
bands and ``M = W A`` (interpolation after pair averaging) has three.  The
fused kernel in :mod:`ttheat.kernels` applies this form without building
cell-centered temporaries.
"""
from __future__ import annotations

import weakref

import numpy as np

from .grid import Grid3, GridAxis

_CACHE: "weakref.WeakKeyDictionary[Grid3, list]" = weakref.WeakKeyDictionary()


def average_matrix(axis: GridAxis) -> np.ndarray:
    n = axis.nc
    A = np.zeros((n, n + 1))
    idx = np.arange(n)
    A[idx, idx] = 0.5
    A[idx, idx + 1] = 0.5
    return A


def first_derivative_matrix(axis: GridAxis) -> np.ndarray:
    n = axis.nc
    s = axis.derivative_scale()
    D = np.zeros((n, n + 1))
    idx = np.arange(n)
    D[idx, idx] = -1.0 / s
    D[idx, idx + 1] = 1.0 / s
    return D


def second_derivative_matrix(axis: GridAxis, form: str = "centered") -> np.ndarray:
    n = axis.nc
    D2 = np.zeros((n, n + 1))
    if axis.kind == "regular":
        h = axis.cell_steps[0]
        for i in range(1, n - 1):
            D2[i, i - 1:i + 3] = np.array([1.0, -1.0, -1.0, 1.0]) / (2.0 * h * h)
    else:
        D1 = first_derivative_matrix(axis)
        right, left = axis.half_sum_denominators(form)
        for i in range(1, n - 1):
            D2[i] = 0.5 * ((D1[i + 1] - D1[i]) / right[i] + (D1[i] - D1[i - 1]) / left[i])
    return D2


def interpolation_matrix(axis: GridAxis, variant: str = "printed") -> np.ndarray:
    wl, wr = axis.interp_weights(variant)
    m = axis.interior_mask()
    W = np.zeros((axis.nv, axis.nc))
    idx = np.arange(1, axis.nv - 1)
    W[idx, idx - 1] = (wl * m)[idx]
    W[idx, idx] = (wr * m)[idx]
    return W


def to_bands(M: np.ndarray, half: int) -> np.ndarray:
    """Rows of a square banded matrix as ``B[b, i] = M[i, i + b - half]``."""
    n = M.shape[0]
    B = np.zeros((2 * half + 1, n))
    for b in range(2 * half + 1):
        off = b - half
        lo, hi = max(0, -off), min(n, n - off)
        B[b, lo:hi] = M[np.arange(lo, hi), np.arange(lo, hi) + off]
    return B


def axis_factors(axis: GridAxis, form: str, variant: str):
    W = interpolation_matrix(axis, variant)
    V = W @ second_derivative_matrix(axis, form)
    M = W @ average_matrix(axis)
    return to_bands(V, 2), to_bands(M, 1)


def laplacian_bands(g: Grid3):
    """Band triples whose banded sum equals the vertex Laplacian of ``g``."""
    cached = _CACHE.get(g)
    if cached is not None:
        return cached
    f = [axis_factors(ax, g.second_derivative, g.interpolation) for ax in g.axes]
    (Vx, Mx), (Vy, My), (Vz, Mz) = f
    bands = [(Vx, My, Mz), (Mx, Vy, Mz), (Mx, My, Vz)]
    _CACHE[g] = bands
    return bands

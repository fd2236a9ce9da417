"""Manufactured solutions, forcings and their sampled providers.

Each case is written as a short sum ``u(t) = sum_k a_k(t) U_k`` and
``f(t) = sum_k b_k(t) F_k`` of spatial fields with scalar time factors.
The spatial parts are sampled (and compressed, for tensor trains) once per
grid; providers then only combine them.

On remapped grids the operator approximates ``sum F d/dx (F du/dx)`` with
``F = 1 / x~'(x)``, so the forcing is built from that operator:
``F**2 u_xx + F F' u_x`` per axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import tt_core
from .errors import InvalidInputError
from .grid import Grid3, GridAxis
from .tt_core import DenseField3, TTTensor3

TWO_PI = 2.0 * np.pi

# Relative threshold used when a spatial part is compressed exactly.
EXACT_EPS = 1e-14


def _s(a):
    return np.sin(TWO_PI * a)


def _c(a):
    return np.cos(TWO_PI * a)


def _axis_coefficients(axis: GridAxis, x):
    """``(F^2, F F')`` of the axis metric at ``x``; ``(1, 0)`` off remapped axes."""
    if axis.kind != "remapped":
        return np.ones_like(x), np.zeros_like(x)
    d1 = axis.metric
    h = 1e-5
    m = d1(x)
    dm = getattr(d1, "derivative", None)
    if dm is None:
        # Fall back to a fourth-order central difference of the metric.
        mp = (-d1(x + 2 * h) + 8 * d1(x + h) - 8 * d1(x - h) + d1(x - 2 * h)) / (12 * h)
    else:
        mp = dm(x)
    F = 1.0 / m
    Fp = -mp / (m * m)
    return F * F, F * Fp


@dataclass
class ManufacturedCase:
    """Closed-form solution and forcing of ``u_t - Lap u = f``."""

    id: str
    solution: Callable
    forcing: Callable
    separable_factors: Optional[Tuple[Callable, Callable, Callable]] = None
    reference_rank: Optional[int] = None
    laplacian: Optional[Callable] = field(default=None, repr=False)
    time_derivative: Optional[Callable] = field(default=None, repr=False)


def _u1_lap(x, y, z, t=0.0):
    return -3.0 * TWO_PI ** 2 * _s(x) * _s(y) * _s(z)


def _u3_s(x, y, z):
    return x + y + z - 1.5


def manufactured(case_id: str) -> ManufacturedCase:
    if case_id == "u1":
        return ManufacturedCase(
            "u1",
            solution=lambda x, y, z, t=0.0: _s(x) * _s(y) * _s(z),
            forcing=lambda x, y, z, t=0.0: 3.0 * TWO_PI ** 2 * _s(x) * _s(y) * _s(z),
            separable_factors=(_s, _s, _s),
            reference_rank=1,
            laplacian=_u1_lap,
            time_derivative=lambda x, y, z, t=0.0: 0.0 * x,
        )
    if case_id == "u2":
        return ManufacturedCase(
            "u2",
            solution=lambda x, y, z, t: _s(x) * _s(y) * _s(z) * np.cos(TWO_PI * t),
            forcing=lambda x, y, z, t: _s(x) * _s(y) * _s(z)
            * (-TWO_PI * np.sin(TWO_PI * t) + 3.0 * TWO_PI ** 2 * np.cos(TWO_PI * t)),
            separable_factors=(_s, _s, _s),
            reference_rank=1,
            laplacian=lambda x, y, z, t: _u1_lap(x, y, z) * np.cos(TWO_PI * t),
            time_derivative=lambda x, y, z, t: -TWO_PI * np.sin(TWO_PI * t) * _s(x) * _s(y) * _s(z),
        )
    if case_id == "u3":
        def sol(x, y, z, t):
            return np.exp(-_u3_s(x, y, z) ** 2) * t

        def lap(x, y, z, t):
            s = _u3_s(x, y, z)
            return 3.0 * (4.0 * s * s - 2.0) * np.exp(-s * s) * t

        def frc(x, y, z, t):
            s = _u3_s(x, y, z)
            return np.exp(-s * s) * (1.0 - 3.0 * t * (4.0 * s * s - 2.0))

        return ManufacturedCase(
            "u3", solution=sol, forcing=frc, reference_rank=11, laplacian=lap,
            time_derivative=lambda x, y, z, t: np.exp(-_u3_s(x, y, z) ** 2) + 0.0 * t,
        )
    raise InvalidInputError(f"unknown manufactured case {case_id!r}")


# -- spatial parts ------------------------------------------------------------

def _mesh(g: Grid3):
    return g.vertex_mesh()


def _axis_meshes(g: Grid3):
    """Per-axis coefficient fields broadcast to the vertex grid."""
    out = []
    for ax, axis in enumerate(g.axes):
        F2, FFp = _axis_coefficients(axis, axis.vertices)
        shape = [1, 1, 1]
        shape[ax] = axis.nv
        out.append((F2.reshape(shape), FFp.reshape(shape)))
    return out


def _sine_parts(g: Grid3):
    """Rank-1 factors of ``sss`` and per-axis factors of its continuous Laplacian."""
    S = [_s(ax.vertices) for ax in g.axes]
    C = [_c(ax.vertices) for ax in g.axes]
    lap_terms = []
    for a, axis in enumerate(g.axes):
        F2, FFp = _axis_coefficients(axis, axis.vertices)
        fac = [S[0], S[1], S[2]]
        fac[a] = F2 * (-TWO_PI ** 2) * S[a] + FFp * TWO_PI * C[a]
        lap_terms.append(fac)
    return S, lap_terms


def continuous_laplacian(case: ManufacturedCase, g: Grid3, t: float = 0.0) -> np.ndarray:
    """Sampled ``Lap u`` of the operator the scheme approximates on ``g``."""
    x, y, z = _mesh(g)
    if case.id in ("u1", "u2"):
        _, terms = _sine_parts(g)
        out = sum(np.einsum("i,j,k->ijk", *fac) for fac in terms)
        return out * (np.cos(TWO_PI * t) if case.id == "u2" else 1.0)
    s = _u3_s(x, y, z)
    e = np.exp(-s * s)
    out = np.zeros(g.vertex_shape)
    for (F2, FFp) in _axis_meshes(g):
        out += F2 * (4.0 * s * s - 2.0) * e + FFp * (-2.0 * s) * e
    return out * t


@dataclass
class _Parts:
    """Spatial fields with time-coefficient functions."""

    solution: List[Tuple[Callable, object]]
    forcing: List[Tuple[Callable, object]]


class CaseFields:
    """Sampled solution, forcing and boundary data of a case on one grid.

    ``backend`` is ``"fg"`` or ``"tt"``.  For tensor trains the spatial
    parts are compressed once: separable cases analytically, ``u3`` by
    TT-SVD with ``svd_eps`` and the optional ``rank_cap``.
    """

    def __init__(self, case: ManufacturedCase, g: Grid3, backend: str = "fg",
                 eps: float = 1e-10, rank_cap: Optional[int] = None, svd_eps: float = 1e-12):
        if backend not in ("fg", "tt"):
            raise InvalidInputError(f"unknown backend {backend!r}")
        self.case = case
        self.grid = g
        self.backend = backend
        self.eps = eps
        self.rank_cap = rank_cap
        self.svd_eps = svd_eps
        self.parts = self._build()

    # spatial construction
    def _field(self, dense=None, rank1_terms=None, cap=None):
        if self.backend == "fg":
            if dense is None:
                dense = sum(np.einsum("i,j,k->ijk", *fac) for fac in rank1_terms)
            return DenseField3._wrap(np.asarray(dense, dtype=float), "vertex")
        if rank1_terms is not None:
            tt = tt_core.build_rank1(*rank1_terms[0])
            for fac in rank1_terms[1:]:
                tt = tt_core.add(tt, tt_core.build_rank1(*fac))
            return tt_core.round(tt, EXACT_EPS, cap)
        return tt_core.build_from_full(dense, self.svd_eps, cap)

    def _build(self) -> _Parts:
        case, g = self.case, self.grid
        if case.id in ("u1", "u2"):
            S, lap_terms = _sine_parts(g)
            U = self._field(rank1_terms=[S], cap=self.rank_cap)
            L = self._field(rank1_terms=lap_terms, cap=self.rank_cap)
            if case.id == "u1":
                return _Parts([(lambda t: 1.0, U)], [(lambda t: -1.0, L)])
            return _Parts(
                [(lambda t: np.cos(TWO_PI * t), U)],
                [(lambda t: -TWO_PI * np.sin(TWO_PI * t), U), (lambda t: -np.cos(TWO_PI * t), L)],
            )
        x, y, z = _mesh(g)
        s = _u3_s(x, y, z)
        e = np.exp(-s * s)
        lap = np.zeros(g.vertex_shape)
        for (F2, FFp) in _axis_meshes(g):
            lap += F2 * (4.0 * s * s - 2.0) * e + FFp * (-2.0 * s) * e
        E = self._field(dense=e, cap=self.rank_cap)
        B = self._field(dense=lap, cap=self.rank_cap)
        return _Parts([(lambda t: t, E)], [(lambda t: 1.0, E), (lambda t: -t, B)])

    def _combine(self, terms, t):
        out = None
        for coef, part in terms:
            term = part * float(coef(t))
            out = term if out is None else out + term
        if self.backend == "tt" and len(terms) > 1:
            out = tt_core.round(out, EXACT_EPS)
        return out

    # providers
    def solution(self, t: float):
        return self._combine(self.parts.solution, t)

    def forcing(self, t: float):
        return self._combine(self.parts.forcing, t)

    def boundary(self, t: float):
        return self.solution(t)

    def exact_dense(self, t: float) -> np.ndarray:
        """Exact solution sampled on the vertices (never compressed)."""
        return self.grid.sample(self.case.solution, t)

    def storage(self) -> int:
        return sum(p.storage() for _, p in self.parts.solution + self.parts.forcing)

"""Univariate partitions with ghost frames and their tensor-product grid.

Indexing is 0-based and ghost-inclusive: an axis with ``nc`` physical cells
and ``n_ghost`` ghost frames per side has ``nc + 2*n_ghost`` cells and one
more vertex.  Cell ``i`` lies between vertices ``i`` and ``i + 1``.  The
first and last ``n_ghost + 1`` vertex layers are boundary layers; they carry
Dirichlet data and are never evolved.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, SingularMapError

KINDS = ("regular", "variable", "remapped")
SECOND_DERIVATIVE_FORMS = ("centered", "printed")
INTERPOLATION_WEIGHTS = ("printed", "opposite")


@dataclass(frozen=True, eq=False)
class GridAxis:
    """One direction of the grid, ghost layers included.

    ``vertices`` are physical coordinates.  For remapped axes the vertices
    are equispaced and the map derivative ``x~'(x)`` is sampled at centers
    and vertices; it scales every difference quotient along the axis.
    """

    kind: str
    vertices: np.ndarray
    n_ghost: int = 2
    metric_at_centers: Optional[np.ndarray] = None
    metric_at_vertices: Optional[np.ndarray] = None
    metric: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown axis kind {self.kind!r}")
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise InvalidInputError("an axis needs at least two vertices")
        if not np.all(np.isfinite(v)) or np.any(np.diff(v) <= 0):
            raise InvalidInputError("vertices must be finite and strictly increasing")
        if self.n_ghost < 0 or v.size - 1 <= 2 * self.n_ghost:
            raise InvalidInputError("ghost frames leave no physical cell")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.kind == "remapped":
            if self.metric_at_centers is None or self.metric_at_vertices is None:
                raise InvalidInputError("remapped axis requires metric samples")
            for name in ("metric_at_centers", "metric_at_vertices"):
                m = np.asarray(getattr(self, name), dtype=float)
                if np.any(~np.isfinite(m)) or np.any(m <= 0):
                    raise SingularMapError(f"{name} must be finite and positive")
                m.setflags(write=False)
                object.__setattr__(self, name, m)
            if self.metric_at_centers.size != v.size - 1 or self.metric_at_vertices.size != v.size:
                raise InvalidInputError("metric samples do not match the axis")

    # -- geometry -------------------------------------------------------
    @property
    def nv(self) -> int:
        return self.vertices.size

    @property
    def nc(self) -> int:
        return self.vertices.size - 1

    @property
    def n_cells_physical(self) -> int:
        return self.nc - 2 * self.n_ghost

    @property
    def cell_steps(self) -> np.ndarray:
        return np.diff(self.vertices)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.vertices[1:] + self.vertices[:-1])

    @property
    def h(self) -> float:
        """Smallest physical cell step."""
        g = self.n_ghost
        return float(self.cell_steps[g:self.nc - g].min())

    @property
    def interior(self) -> slice:
        """Vertex index range that is evolved in time."""
        return slice(self.n_ghost + 1, self.nv - self.n_ghost - 1)

    def interior_mask(self) -> np.ndarray:
        m = np.zeros(self.nv)
        m[self.interior] = 1.0
        return m

    # -- 1D coefficients used by the difference operators ---------------
    def derivative_scale(self) -> np.ndarray:
        """Divisor of the forward difference across each cell."""
        if self.kind == "remapped":
            return self.metric_at_centers * self.cell_steps
        return self.cell_steps

    def half_sum_denominators(self, form: str = "centered"):
        """Divisors of the right and left first-derivative differences per cell.

        Entry ``i`` of ``right`` divides ``d(i+1) - d(i)`` and entry ``i`` of
        ``left`` divides ``d(i) - d(i-1)``.  Entries at the first and last
        cell are placeholders (1.0); the stencil does not fit there.
        """
        if form not in SECOND_DERIVATIVE_FORMS:
            raise InvalidInputError(f"unknown second-derivative form {form!r}")
        nc = self.nc
        right = np.ones(nc)
        left = np.ones(nc)
        steps = self.cell_steps
        if form == "centered":
            if self.kind == "remapped":
                dv = self.metric_at_vertices * steps.mean()
                right[:-1] = dv[1:-1]
                left[1:] = dv[1:-1]
            else:
                dc = np.diff(self.centers)
                right[:-1] = dc
                left[1:] = dc
        else:
            scale = self.derivative_scale()
            right[:-1] = scale[1:]
            left[:] = scale
        return right, left

    def interp_weights(self, variant: str = "printed"):
        """Left/right cell weights for every vertex (zero on the outermost two)."""
        if variant not in INTERPOLATION_WEIGHTS:
            raise InvalidInputError(f"unknown interpolation variant {variant!r}")
        nv = self.nv
        if self.kind == "remapped":
            h = self.cell_steps
            mv = self.metric_at_vertices[1:-1]
            dl = 0.25 * h[:-1] * (self.metric_at_centers[:-1] + mv)
            dr = 0.25 * h[1:] * (self.metric_at_centers[1:] + mv)
        else:
            xv = self.vertices[1:-1]
            xc = self.centers
            dl = xv - xc[:-1]
            dr = xc[1:] - xv
        if variant == "opposite":
            dl, dr = dr, dl
        wl = np.zeros(nv)
        wr = np.zeros(nv)
        wl[1:-1] = dl / (dl + dr)
        wr[1:-1] = dr / (dl + dr)
        return wl, wr

    def second_difference_coefficients(self):
        """Lower/diag/upper coefficients of the 3-point vertex second derivative.

        Boundary layers get identity rows (zero coefficients), so the
        resulting operator only couples interior vertices.
        """
        nv = self.nv
        lo = np.zeros(nv)
        up = np.zeros(nv)
        h = self.cell_steps
        inner = np.arange(1, nv - 1)
        if self.kind == "remapped":
            mc = self.metric_at_centers
            mv = self.metric_at_vertices
            lo[inner] = 1.0 / (mv[inner] * mc[inner - 1] * h[inner - 1] * h[inner])
            up[inner] = 1.0 / (mv[inner] * mc[inner] * h[inner - 1] * h[inner])
        else:
            hbar = 0.5 * (h[inner - 1] + h[inner])
            lo[inner] = 1.0 / (h[inner - 1] * hbar)
            up[inner] = 1.0 / (h[inner] * hbar)
        m = self.interior_mask()
        lo *= m
        up *= m
        return lo, -(lo + up), up


def regular_axis(a: float, b: float, nc: int, n_ghost: int = 2) -> GridAxis:
    if not a < b:
        raise InvalidInputError("regular_axis needs a < b")
    if nc < 1:
        raise InvalidInputError("nc must be positive")
    h = (b - a) / nc
    v = a + h * np.arange(-n_ghost, nc + n_ghost + 1, dtype=float)
    return GridAxis("regular", v, n_ghost)


def geometric_axis(a: float, h0: float, ratio: float, nc: int, n_ghost: int = 2) -> GridAxis:
    """Cells grow by ``ratio`` from ``h0``; ghosts continue the law outward."""
    if not (h0 > 0 and ratio > 0):
        raise InvalidInputError("h0 and ratio must be positive")
    if nc < 1:
        raise InvalidInputError("nc must be positive")
    k = np.arange(-n_ghost, nc + n_ghost, dtype=float)
    steps = h0 * ratio ** k
    right = a + np.concatenate(([0.0], np.cumsum(steps[n_ghost:])))
    left = a - np.cumsum(steps[:n_ghost][::-1])[::-1]
    return GridAxis("variable", np.concatenate((left, right)), n_ghost)


def geometric_axis_between(a: float, b: float, ratio: float, nc: int, n_ghost: int = 2) -> GridAxis:
    """Geometric axis whose physical cells exactly cover ``[a, b]``."""
    if not a < b:
        raise InvalidInputError("geometric_axis_between needs a < b")
    if ratio == 1.0:
        h0 = (b - a) / nc
    else:
        h0 = (b - a) * (ratio - 1.0) / (ratio ** nc - 1.0)
    return geometric_axis(a, h0, ratio, nc, n_ghost)


def remapped_axis(a: float, b: float, nc: int, n_ghost: int, metric: Callable) -> GridAxis:
    """Equispaced axis on ``[a, b]`` carrying samples of the map derivative."""
    base = regular_axis(a, b, nc, n_ghost)
    with np.errstate(all="ignore"):
        mv = np.asarray(metric(base.vertices), dtype=float) * np.ones(base.nv)
        mc = np.asarray(metric(base.centers), dtype=float) * np.ones(base.nc)
    if np.any(~np.isfinite(mv)) or np.any(mv <= 0) or np.any(~np.isfinite(mc)) or np.any(mc <= 0):
        raise SingularMapError("coordinate map derivative must stay positive")
    return GridAxis("remapped", base.vertices, n_ghost, mc, mv, metric)


@dataclass(frozen=True, eq=False)
class Grid3:
    """Tensor product of three axes sharing one ghost width.

    ``second_derivative`` selects how the half-sum second derivative divides
    differences on non-regular axes; ``interpolation`` selects the 1D
    cell-to-vertex weights.  Both matter only off regular grids.
    """

    axes: tuple
    second_derivative: str = "centered"
    interpolation: str = "printed"

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) != 3:
            raise InvalidInputError("Grid3 needs exactly three axes")
        if len({ax.n_ghost for ax in axes}) != 1:
            raise InvalidInputError("all axes must share n_ghost")
        if self.second_derivative not in SECOND_DERIVATIVE_FORMS:
            raise InvalidInputError(f"unknown second-derivative form {self.second_derivative!r}")
        if self.interpolation not in INTERPOLATION_WEIGHTS:
            raise InvalidInputError(f"unknown interpolation variant {self.interpolation!r}")
        object.__setattr__(self, "axes", axes)

    @property
    def n_ghost(self) -> int:
        return self.axes[0].n_ghost

    @property
    def vertex_shape(self):
        return tuple(ax.nv for ax in self.axes)

    @property
    def cell_shape(self):
        return tuple(ax.nc for ax in self.axes)

    @property
    def h(self) -> float:
        return min(ax.h for ax in self.axes)

    @property
    def interior(self):
        return tuple(ax.interior for ax in self.axes)

    def masks(self):
        return tuple(ax.interior_mask() for ax in self.axes)

    def interior_indicator(self) -> np.ndarray:
        mx, my, mz = self.masks()
        return mx[:, None, None] * my[None, :, None] * mz[None, None, :]

    def vertex_mesh(self):
        return np.meshgrid(*(ax.vertices for ax in self.axes), indexing="ij")

    def cell_mesh(self):
        return np.meshgrid(*(ax.centers for ax in self.axes), indexing="ij")

    def sample(self, fn: Callable, *args, centering: str = "vertex") -> np.ndarray:
        """Evaluate ``fn(x, y, z, *args)`` on vertices or cell centers."""
        x, y, z = self.vertex_mesh() if centering == "vertex" else self.cell_mesh()
        return np.asarray(fn(x, y, z, *args), dtype=float) * np.ones(x.shape)

    def with_options(self, **kw) -> "Grid3":
        opts = dict(second_derivative=self.second_derivative, interpolation=self.interpolation)
        opts.update(kw)
        return Grid3(self.axes, **opts)


def cube(axis_factory: Callable[[], GridAxis], **options) -> Grid3:
    """Grid3 built from three copies of one axis."""
    ax = axis_factory()
    return Grid3((ax, ax, ax), **options)


def exponential_map_derivatives(scale: float = 2.0, rate: float = 2.0):
    """Derivatives of the map ``x -> -scale * exp(-rate * x)``.

    Returns ``(d1, d2)`` with ``d1 = x~'`` and ``d2 = x~''``.
    """
    def d1(x):
        return scale * rate * np.exp(-rate * np.asarray(x, dtype=float))

    def d2(x):
        return -scale * rate * rate * np.exp(-rate * np.asarray(x, dtype=float))

    d1.derivative = d2
    return d1, d2


def scenario_grid(scenario: str, nc: int, n_ghost: int = 2, base_nc: int = 20,
                  base_ratio: float = 1.125, **options) -> Grid3:
    """Unit-cube grid for one of the three experiment scenarios.

    Variable grids refine by nesting: the step ratio at ``nc`` cells is
    ``base_ratio ** (base_nc / nc)`` so every refinement splits each cell in
    two geometric halves and the physical domain stays ``[0, 1]``.
    """
    if scenario == "regular":
        ax = regular_axis(0.0, 1.0, nc, n_ghost)
    elif scenario == "variable":
        ax = geometric_axis_between(0.0, 1.0, base_ratio ** (base_nc / nc), nc, n_ghost)
    elif scenario == "remapped":
        d1, _ = exponential_map_derivatives()
        ax = remapped_axis(0.0, 1.0, nc, n_ghost, d1)
    else:
        raise InvalidInputError(f"unknown scenario {scenario!r}")
    return Grid3((ax, ax, ax), **options)


def axes_from_sequence(axes: Sequence[GridAxis], **options) -> Grid3:
    return Grid3(tuple(axes), **options)

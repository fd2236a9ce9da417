"""Consistency, convergence and conditioning studies.

Each study returns a report whose rows follow the refinement levels.
Wall-clock times cover only the operator application or the time loop;
building grids, providers and initial data is excluded.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import fg_ops, stepper, tt_core, tt_ops
from .cases import CaseFields, continuous_laplacian, manufactured
from .errors import DivergenceError, InvalidInputError
from .grid import Grid3, scenario_grid
from .stepper import SolverConfig
from .tt_core import DenseField3, TTTensor3

BACKENDS = ("fg", "tt", "both")

# Refinement of the time step per level, by scheme.
DT_FACTORS = {"explicit": 4.0, "implicit": 2.0, "crank_nicolson": 2.0}

# Rounding thresholds used when none is given.
DEFAULT_EPS = {"u1": 1e-10, "u2": 1e-4, "u3": 1e-7}


@dataclass
class LevelRow:
    level: int
    nc: int
    h: float
    dt: Optional[float] = None
    err_fg: Optional[float] = None
    rate_fg: Optional[float] = None
    err_tt: Optional[float] = None
    rate_tt: Optional[float] = None
    time_fg_s: Optional[float] = None
    time_tt_s: Optional[float] = None
    time_ratio: Optional[float] = None
    strg_fg: Optional[int] = None
    strg_tt: Optional[int] = None
    strg_ratio: Optional[float] = None
    max_rank: Optional[int] = None
    rank_history: List[int] = field(default_factory=list, repr=False)
    pcg_converged: bool = True


@dataclass
class RunReport:
    kind: str
    params: Dict[str, object]
    rows: List[LevelRow] = field(default_factory=list)

    def errors(self, backend: str) -> List[Optional[float]]:
        return [getattr(r, f"err_{backend}") for r in self.rows]

    def rates(self, backend: str) -> List[Optional[float]]:
        return [getattr(r, f"rate_{backend}") for r in self.rows[1:]]

    @property
    def pcg_converged(self) -> bool:
        return all(r.pcg_converged for r in self.rows)


@dataclass
class EigenRow:
    nc: int
    dt: float
    lambda_a: float
    lambda_pa: float
    lambda_pa_interior: float


@dataclass
class EigenReport:
    scenario: str
    rows: List[EigenRow] = field(default_factory=list)


def _data(u) -> np.ndarray:
    if isinstance(u, TTTensor3):
        return tt_core.to_full(u).data
    if isinstance(u, DenseField3):
        return u.data
    return np.asarray(u, dtype=float)


def error_norm(uh, uex, g: Grid3, relative: bool = False) -> float:
    """``h**1.5 * ||uh - uex||_F`` over interior vertices (``h`` = min step).

    The relative variant divides by ``h**1.5 * ||uex||_F`` on the same set.
    """
    a, b = _data(uh), _data(uex)
    if a.shape != g.vertex_shape or b.shape != g.vertex_shape:
        raise InvalidInputError("error_norm needs vertex fields on the grid")
    I = g.interior
    diff = float(np.linalg.norm((a - b)[I]))
    if relative:
        ref = float(np.linalg.norm(b[I]))
        if ref == 0.0:
            raise InvalidInputError("relative error of a zero reference")
        return diff / ref
    return g.h ** 1.5 * diff


def _rate(e_prev, e, n_prev, n):
    if e_prev is None or e is None or e_prev <= 0 or e <= 0:
        return None
    return math.log(e_prev / e) / math.log(n / n_prev)


def _ratio(a, b):
    if a is None or b is None or b == 0:
        return None
    return a / b


def _finish(rows: List[LevelRow]) -> None:
    for prev, row in zip(rows, rows[1:]):
        row.rate_fg = _rate(prev.err_fg, row.err_fg, prev.nc, row.nc)
        row.rate_tt = _rate(prev.err_tt, row.err_tt, prev.nc, row.nc)
    for row in rows:
        row.time_ratio = _ratio(row.time_fg_s, row.time_tt_s)
        row.strg_ratio = _ratio(row.strg_fg, row.strg_tt)


def _backends(backend: str):
    if backend not in BACKENDS:
        raise InvalidInputError(f"backend must be one of {BACKENDS}")
    return ("fg", "tt") if backend == "both" else (backend,)


# -- consistency --------------------------------------------------------------

def consistency_study(scenario: str = "regular", nc_list: Sequence[int] = (20, 40, 80),
                      backend: str = "both", eps: float = 1e-10, **grid_options) -> RunReport:
    """Residual of the vertex Laplacian of ``u1`` against the exact Laplacian."""
    case = manufactured("u1")
    rows = []
    for level, nc in enumerate(nc_list):
        g = scenario_grid(scenario, nc, **grid_options)
        exact = continuous_laplacian(case, g)
        row = LevelRow(level, nc, g.h)
        for be in _backends(backend):
            u = CaseFields(case, g, be).solution(0.0)
            t0 = time.perf_counter()
            if be == "fg":
                lap = fg_ops.laplacian_vertex(u, g)
            else:
                lap = tt_ops.tt_laplacian_vertex(u, g, eps)
            elapsed = time.perf_counter() - t0
            setattr(row, f"err_{be}", error_norm(lap, exact, g))
            setattr(row, f"time_{be}_s", elapsed)
            setattr(row, f"strg_{be}", u.storage())
            if be == "tt":
                row.max_rank = lap.max_rank()
                row.rank_history = [u.max_rank(), lap.max_rank()]
        rows.append(row)
    _finish(rows)
    return RunReport("consistency", {"scenario": scenario, "eps": eps, "backend": backend}, rows)


# -- convergence --------------------------------------------------------------

def level_dt(level: int, dt0: float, scheme: str, dt_factor: Optional[float] = None) -> float:
    f = DT_FACTORS[SolverConfig(scheme=scheme).scheme] if dt_factor is None else dt_factor
    return dt0 / f ** level


def _run_level(args) -> LevelRow:
    (level, nc, scenario, case_id, scheme, dt, t_final, eps, be_list, rank_cap,
     pcg_tol, pcg_maxiter, bc_conv, extrapolate, precondition, grid_options) = args
    case = manufactured(case_id)
    g = scenario_grid(scenario, nc, **grid_options)
    row = LevelRow(level, nc, g.h, dt)
    exact = None
    for be in be_list:
        cf = CaseFields(case, g, be, eps=eps, rank_cap=rank_cap if be == "tt" else None)
        if exact is None:
            exact = cf.exact_dense(t_final)
        cfg = SolverConfig(scheme=scheme, dt=dt, t_final=t_final, eps_round=eps,
                           pcg_tol=pcg_tol, pcg_maxiter=pcg_maxiter, backend=be,
                           initial_rank_cap=rank_cap if be == "tt" else None,
                           bc_time_convention=bc_conv, precondition=precondition)
        u0 = cf.solution(0.0)
        t0 = time.perf_counter()
        try:
            u, reports = stepper.run_simulation(u0, g, cf.forcing, cf.boundary, cfg)
        except DivergenceError as exc:
            exc.level = level
            exc.backend = be
            raise
        elapsed = time.perf_counter() - t0
        if extrapolate is not None:
            elapsed *= extrapolate / t_final
        setattr(row, f"err_{be}", error_norm(u, exact, g, relative=True))
        setattr(row, f"time_{be}_s", elapsed)
        setattr(row, f"strg_{be}", u.storage())
        row.pcg_converged = row.pcg_converged and all(r.converged for r in reports)
        if be == "tt":
            row.rank_history = [r.max_rank for r in reports]
            row.max_rank = max(row.rank_history, default=u.max_rank())
    return row


def convergence_study(case: str = "u2", scenario: str = "regular", scheme: str = "explicit",
                      levels: Sequence[int] = (20, 40), dt0: float = 1e-4,
                      eps: Optional[float] = None, backend: str = "both",
                      rank_cap: Optional[int] = None, t_final: Optional[float] = None,
                      steps: int = 100, dt_factor: Optional[float] = None,
                      pcg_tol: float = 1e-8, pcg_maxiter: int = 500,
                      bc_time_convention: str = "as_printed",
                      extrapolate: Optional[float] = None, jobs: int = 1,
                      fixed_steps: bool = False, precondition: bool = True,
                      **grid_options) -> RunReport:
    """Run the same problem on refined grids and report errors and rates.

    The horizon is ``t_final`` or, when omitted, ``steps * dt0``; it is the
    same on every level.  With ``fixed_steps`` every level instead runs
    ``steps`` steps, so the horizon shrinks with ``dt``.  ``dt`` shrinks by
    ``dt_factor`` per level (4 for explicit Euler, 2 otherwise).
    ``extrapolate`` rescales measured times to that horizon, as for runs
    on a truncated horizon.  ``precondition=False`` runs plain CG.
    """
    manufactured(case)
    scheme = SolverConfig(scheme=scheme).scheme
    if eps is None:
        eps = DEFAULT_EPS[case]
    if steps < 1:
        raise InvalidInputError("steps must be positive")
    if t_final is None and not fixed_steps:
        t_final = steps * dt0
    be_list = _backends(backend)
    jobs_args = []
    for lvl, nc in enumerate(levels):
        dt = level_dt(lvl, dt0, scheme, dt_factor)
        horizon = steps * dt if fixed_steps else t_final
        jobs_args.append((lvl, nc, scenario, case, scheme, dt, horizon, eps, be_list, rank_cap,
                          pcg_tol, pcg_maxiter, bc_time_convention, extrapolate, precondition,
                          grid_options))
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_level, jobs_args))
    else:
        rows = [_run_level(a) for a in jobs_args]
    rows.sort(key=lambda r: r.level)
    _finish(rows)
    params = {"case": case, "scenario": scenario, "scheme": scheme, "dt0": dt0, "eps": eps,
              "backend": backend, "rank_cap": rank_cap, "t_final": t_final,
              "precondition": precondition}
    return RunReport("converge", params, rows)


# -- conditioning -------------------------------------------------------------

def full_heat_operator(g: Grid3, tau_dt: float, precondition: bool = False):
    """``p - tau_dt * Lap(p)`` on every vertex, preconditioned on request.

    The vertex Laplacian vanishes on the boundary layers, so Dirichlet rows
    act as the identity.  The spectrum is that of the interior operator
    plus the eigenvalue 1.
    """
    def op(p):
        out = stepper.heat_matvec(p, g, tau_dt) + (p - stepper._mask(p, g))
        # Preconditioner factors have identity rows on the boundary layers.
        return stepper.precond_apply(out, g, tau_dt) if precondition else out
    return op


def interior_heat_operator(g: Grid3, tau_dt: float, precondition: bool = False):
    """The Krylov-space operator: boundary layers held at zero."""
    def op(p):
        out = stepper.heat_matvec(p, g, tau_dt)
        return stepper._mask(stepper.precond_apply(out, g, tau_dt), g) if precondition else out
    return op


def eigen_study(scenario: str = "regular", nc_list: Sequence[int] = (20, 40),
                dt_list: Sequence[float] = (1.0, 0.1, 0.01), iters: int = 2000,
                tol: float = 1e-9, seed: int = 0, **grid_options) -> EigenReport:
    """Power-method estimates of the largest eigenvalue of A and of P^-1 A.

    ``lambda_a`` and ``lambda_pa`` use the full vertex operator (identity
    rows on the boundary); ``lambda_pa_interior`` restricts P^-1 A to
    fields that vanish on the boundary layers.
    """
    out = EigenReport(scenario)
    for nc in nc_list:
        g = scenario_grid(scenario, nc, **grid_options)
        rng = np.random.default_rng(seed)
        x_full = DenseField3._wrap(rng.standard_normal(g.vertex_shape), "vertex")
        for dt in dt_list:
            la = stepper.power_method_lambda_max(full_heat_operator(g, dt), g, iters, tol, x0=x_full)
            lpa = stepper.power_method_lambda_max(full_heat_operator(g, dt, True), g, iters, tol,
                                                  x0=x_full)
            lpi = stepper.power_method_lambda_max(interior_heat_operator(g, dt, True), g, iters,
                                                  tol, seed=seed)
            out.rows.append(EigenRow(nc, float(dt), la, lpa, lpi))
    return out

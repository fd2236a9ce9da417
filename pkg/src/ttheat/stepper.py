"""Time integration of the heat equation on full grids and tensor trains.

Fields are either :class:`DenseField3` (full grid) or :class:`TTTensor3`;
every routine dispatches on the field type, so the same code drives both
backends.  Rounding is the identity on full grids.

Providers are callables of time: ``f_provider(t)`` returns the forcing
sampled on the vertices, ``g_provider(t)`` the boundary data sampled on
the vertices (only boundary layers are read).
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from . import fg_ops, kernels, stencils, tt_core, tt_ops
from .errors import DivergenceError, InvalidInputError
from .grid import Grid3
from .tt_core import DenseField3, TTTensor3

SCHEMES = ("explicit", "implicit", "crank_nicolson")
BC_TIME_CONVENTIONS = ("as_printed", "target_time")


@dataclass
class SolverConfig:
    """Run parameters.

    ``initial_rank_cap`` fixes the rank budget of a TT run: every rounding
    is truncated to at most that rank after the ``eps_round`` truncation.
    """

    scheme: str = "explicit"
    dt: float = 1e-4
    t_final: float = 1e-2
    eps_round: float = 1e-4
    pcg_tol: float = 1e-8
    pcg_maxiter: int = 500
    backend: str = "fg"
    initial_rank_cap: Optional[int] = None
    bc_time_convention: str = "as_printed"
    precondition: bool = True
    divergence_factor: float = 1e12

    def __post_init__(self):
        if self.scheme == "cn":
            self.scheme = "crank_nicolson"
        if self.scheme not in SCHEMES:
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if self.t_final < 0:
            raise InvalidInputError("t_final must be nonnegative")
        if self.t_final > 0 and self.dt > self.t_final * (1 + 1e-12):
            raise InvalidInputError("dt must not exceed t_final")
        if not self.eps_round >= 0:
            raise InvalidInputError("eps_round must be nonnegative")
        if not 0 < self.pcg_tol < 1:
            raise InvalidInputError("pcg_tol must lie in (0, 1)")
        if self.pcg_maxiter < 1:
            raise InvalidInputError("pcg_maxiter must be positive")
        if self.backend not in ("fg", "tt", "both"):
            raise InvalidInputError(f"unknown backend {self.backend!r}")
        if self.initial_rank_cap is not None and int(self.initial_rank_cap) < 1:
            raise InvalidInputError("initial_rank_cap must be positive")
        if self.bc_time_convention not in BC_TIME_CONVENTIONS:
            raise InvalidInputError(f"unknown bc_time_convention {self.bc_time_convention!r}")


@dataclass
class StepReport:
    step: int
    time: float
    max_rank: int
    pcg_iterations: int = 0
    residual: float = 0.0
    converged: bool = True


class PCGResult(NamedTuple):
    x: object
    iterations: int
    residual: float
    converged: bool
    initial_residual: float


# -- backend-generic helpers --------------------------------------------------

def _is_tt(u) -> bool:
    return isinstance(u, TTTensor3)


def _round(u, eps, cap=None):
    if _is_tt(u) and eps is not None:
        return tt_core.round(u, eps, cap)
    return u


def _dot(a, b) -> float:
    if _is_tt(a):
        return tt_core.inner(a, b)
    return float(np.vdot(a.data, b.data))


def _norm(a) -> float:
    return a.norm()


def _mask(u, g: Grid3):
    if _is_tt(u):
        return tt_ops.tt_mask_interior(u, g)
    return fg_ops.mask_interior(u, g)


def _lap(u, g: Grid3, eps, cap=None):
    if _is_tt(u):
        s = _round(tt_ops.tt_laplacian_cell(u, g, None), eps, cap)
        return tt_ops.tt_interp_vertex(s, g)
    if u.shape != g.vertex_shape:
        raise InvalidInputError(f"field shape {u.shape} does not match grid {g.vertex_shape}")
    return DenseField3._wrap(kernels.apply_banded3(u.data, stencils.laplacian_bands(g)), "vertex")


def _set_bc(u, g: Grid3, boundary, eps, cap=None):
    if _is_tt(u):
        return _round(tt_ops.tt_set_dirichlet(u, g, boundary, None), eps, cap)
    return fg_ops.set_dirichlet_values(u, g, boundary.data)


def _boundary_extension(boundary, g: Grid3, eps, cap=None):
    """Boundary data with the interior zeroed."""
    return _round(boundary - _mask(boundary, g), eps, cap)


def _check_finite(u) -> bool:
    if _is_tt(u):
        return all(np.all(np.isfinite(c)) for c in u.cores)
    return bool(np.all(np.isfinite(u.data)))


# -- operators ----------------------------------------------------------------

def heat_matvec(p, g: Grid3, tau_dt: float, eps: Optional[float] = None,
                max_rank: Optional[int] = None):
    """``p - tau_dt * Lap(p)`` on interior vertices, zero on boundary layers."""
    return _round(_mask(p, g) - _lap(p, g, eps, max_rank) * tau_dt, eps, max_rank)


def thomas(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system; ``lower``/``upper`` have length n-1."""
    diag = np.asarray(diag, dtype=float)
    n = diag.size
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float)
    if n < 1 or lower.size != n - 1 or upper.size != n - 1 or rhs.shape[0] != n:
        raise InvalidInputError("thomas: inconsistent system sizes")
    vec = rhs.ndim == 1
    x = kernels.thomas_batched(lower, diag, upper, rhs.reshape(n, -1))
    return x.ravel() if vec else x


_FACTORS: "weakref.WeakKeyDictionary[Grid3, dict]" = weakref.WeakKeyDictionary()


def precond_factors(g: Grid3, tau_dt: float):
    """Per-axis ``(lower, diag, upper)`` of ``I - tau_dt * L``.

    ``L`` is the 3-point second derivative on interior vertices with the
    boundary eliminated (Dirichlet rows are identity rows).
    """
    per_grid = _FACTORS.setdefault(g, {})
    key = float(tau_dt)
    if key in per_grid:
        return per_grid[key]
    out = []
    for axis in g.axes:
        lo, _, up = axis.second_difference_coefficients()
        m = axis.interior_mask()
        diag = 1.0 + tau_dt * (lo + up)
        lower = -tau_dt * lo[1:] * m[:-1]
        upper = -tau_dt * up[:-1] * m[1:]
        out.append((lower, diag, upper))
    per_grid[key] = out
    return out


def precond_apply(r, g: Grid3, tau_dt: float, eps: Optional[float] = None):
    """Apply the three inverse 1D factors; TT ranks are unchanged."""
    factors = precond_factors(g, tau_dt)
    if _is_tt(r):
        cores = []
        for core, (lo, di, up) in zip(r.cores, factors):
            a, n, b = core.shape
            rhs = np.ascontiguousarray(core.transpose(1, 0, 2).reshape(n, a * b))
            z = kernels.thomas_batched(lo, di, up, rhs)
            cores.append(np.ascontiguousarray(z.reshape(n, a, b).transpose(1, 0, 2)))
        return TTTensor3._wrap(cores, r.centering)
    if r.shape != g.vertex_shape:
        raise InvalidInputError(f"field shape {r.shape} does not match grid {g.vertex_shape}")
    data = r.data
    for ax, (lo, di, up) in enumerate(factors):
        moved = np.moveaxis(data, ax, 0)
        shape = moved.shape
        z = kernels.thomas_batched(lo, di, up, np.ascontiguousarray(moved).reshape(shape[0], -1))
        data = np.moveaxis(z.reshape(shape), 0, ax)
    return DenseField3._wrap(np.ascontiguousarray(data), "vertex")


def pcg(x0, b, g: Grid3, tau_dt: float, cfg: SolverConfig) -> PCGResult:
    """Preconditioned CG with rounding of the iterate, residual and direction."""
    eps = cfg.eps_round if _is_tt(x0) else None
    cap = cfg.initial_rank_cap

    def A(p):
        return heat_matvec(p, g, tau_dt, eps, cap)

    def P(r):
        return precond_apply(r, g, tau_dt, eps) if cfg.precondition else r

    x = x0
    r = _round(b - A(x), eps, cap)
    r0 = _norm(r)
    if r0 == 0.0:
        return PCGResult(x, 0, 0.0, True, 0.0)
    z = P(r)
    p = z
    rho = _dot(r, z)
    rn = r0
    for it in range(1, cfg.pcg_maxiter + 1):
        Ap = A(p)
        alpha = rho / _dot(p, Ap)
        x = _round(x + p * alpha, eps, cap)
        r = _round(r - Ap * alpha, eps, cap)
        rn = _norm(r)
        if rn < cfg.pcg_tol * r0:
            return PCGResult(x, it, rn, True, r0)
        z = P(r)
        rho_new = _dot(r, z)
        p = _round(z + p * (rho_new / rho), eps, cap)
        rho = rho_new
    return PCGResult(x, cfg.pcg_maxiter, rn, False, r0)


# -- schemes ------------------------------------------------------------------

def explicit_step(u, g: Grid3, f_provider: Callable, g_provider: Callable,
                  t: float, dt: float, eps: Optional[float] = None,
                  max_rank: Optional[int] = None):
    ub = _set_bc(u, g, g_provider(t), eps, max_rank)
    rate = _lap(ub, g, eps, max_rank) + _mask(f_provider(t), g)
    return _round(ub + rate * dt, eps, max_rank)


def _implicit(u, g, f_provider, g_provider, t_force, dt, t_bc, eps, cfg):
    """Solve ``x - dt Lap x = u + dt f(t_force)`` with boundary data at ``t_bc``."""
    cap = cfg.initial_rank_cap
    gb = g_provider(t_bc)
    ub = _set_bc(u, g, gb, eps, cap)
    rhs = _round(ub + _mask(f_provider(t_force), g) * dt, eps, cap)
    lift = _boundary_extension(gb, g, eps, cap)
    b = _round(_mask(rhs, g) - heat_matvec(lift, g, dt, eps, cap), eps, cap)
    res = pcg(_mask(ub, g), b, g, dt, cfg)
    return _round(res.x + lift, eps, cap), res


def implicit_step(u, g: Grid3, f_provider: Callable, g_provider: Callable,
                  t: float, dt: float, eps: Optional[float], cfg: SolverConfig,
                  return_info: bool = False):
    t_bc = t if cfg.bc_time_convention == "as_printed" else t + dt
    out, res = _implicit(u, g, f_provider, g_provider, t + dt, dt, t_bc, eps, cfg)
    return (out, res) if return_info else out


def cn_step(u, g: Grid3, f_provider: Callable, g_provider: Callable,
            t: float, dt: float, eps: Optional[float], cfg: SolverConfig,
            return_info: bool = False):
    half = explicit_step(u, g, f_provider, g_provider, t, 0.5 * dt, eps, cfg.initial_rank_cap)
    t_bc = t + 0.5 * dt if cfg.bc_time_convention == "as_printed" else t + dt
    out, res = _implicit(half, g, f_provider, g_provider, t + dt, 0.5 * dt, t_bc, eps, cfg)
    return (out, res) if return_info else out


def power_method_lambda_max(op: Callable, g: Grid3, iters: int = 500, tol: float = 1e-8,
                            x0=None, seed: int = 0) -> float:
    """Rayleigh-quotient power iteration on zero-boundary fields."""
    if iters < 1:
        raise InvalidInputError("iters must be positive")
    if x0 is None:
        rng = np.random.default_rng(seed)
        x0 = DenseField3._wrap(rng.standard_normal(g.vertex_shape) * g.interior_indicator(), "vertex")
    nrm = _norm(x0)
    if nrm == 0.0:
        raise InvalidInputError("power method needs a nonzero start vector")
    v = x0 * (1.0 / nrm)
    lam = None
    for _ in range(iters):
        w = op(v)
        lam_new = _dot(v, w)
        wn = _norm(w)
        if wn == 0.0:
            return 0.0
        v = w * (1.0 / wn)
        if lam is not None and abs(lam_new - lam) <= tol * abs(lam_new):
            return float(lam_new)
        lam = lam_new
    return float(lam)


def run_simulation(u0, g: Grid3, f_provider: Callable, g_provider: Callable,
                   cfg: SolverConfig, on_step: Optional[Callable] = None):
    """March from ``t = 0`` to ``cfg.t_final``; returns ``(u, reports)``."""
    n_steps = int(np.rint(cfg.t_final / cfg.dt)) if cfg.t_final > 0 else 0
    if n_steps == 0:
        return u0, []
    dt = cfg.t_final / n_steps
    eps = cfg.eps_round if _is_tt(u0) else None
    cap = cfg.initial_rank_cap
    ref = _norm(u0) or 1.0
    u = u0
    reports: List[StepReport] = []
    for n in range(n_steps):
        t = n * dt
        iters, resid, conv = 0, 0.0, True
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                if cfg.scheme == "explicit":
                    u = explicit_step(u, g, f_provider, g_provider, t, dt, eps, cap)
                elif cfg.scheme == "implicit":
                    u, res = implicit_step(u, g, f_provider, g_provider, t, dt, eps, cfg, True)
                    iters, resid, conv = res.iterations, res.residual, res.converged
                else:
                    u, res = cn_step(u, g, f_provider, g_provider, t, dt, eps, cfg, True)
                    iters, resid, conv = res.iterations, res.residual, res.converged
        except np.linalg.LinAlgError as exc:
            raise DivergenceError(f"step {n + 1} failed: {exc}", step=n + 1) from exc
        if not _check_finite(u) or _norm(u) > cfg.divergence_factor * ref:
            raise DivergenceError(f"solution diverged at step {n + 1} (t={t + dt:.6g})", step=n + 1)
        rep = StepReport(n + 1, (n + 1) * dt, u.max_rank(), iters, resid, conv)
        reports.append(rep)
        if on_step is not None:
            on_step(rep, u)
    u = _set_bc(u, g, g_provider(cfg.t_final), eps, cap)
    return u, reports

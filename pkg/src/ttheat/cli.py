"""Command-line driver for the consistency, convergence and eigenvalue studies.

Exit codes: 0 success, 2 divergence, 3 PCG did not converge on some level,
64 usage error.  Every long flag can also be set in a ``key=value`` file
passed with ``--config``; flags on the command line win.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from . import __version__, report, studies
from .errors import DivergenceError, InvalidInputError, SingularMapError

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_PCG = 3
EXIT_USAGE = 64

COMMANDS = ("consistency", "converge", "eigen")
_BOOL_FLAGS = {"full", "fixed_steps", "verbose", "no_precondition"}

log = logging.getLogger("ttheat")


class UsageError(Exception):
    pass


class ConfigError(UsageError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {s}")
    return v


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--scenario", choices=("regular", "variable", "remapped"), default="regular")
    p.add_argument("--backend", choices=("fg", "tt", "both"), default="both")
    p.add_argument("--nc", type=_positive_int, nargs="+", help="cells per axis, one per level")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=report.FORMATS, default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--second-derivative", choices=("centered", "printed"), default="centered")
    p.add_argument("--interpolation", choices=("printed", "opposite"), default="printed")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ttheat", description="Low-rank tensor-train heat equation studies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    c = sub.add_parser("consistency", help="Laplacian residual of u1 under refinement")
    _common(c)
    c.add_argument("--levels", type=_positive_int, default=3)
    c.add_argument("--eps", type=_nonneg_float, default=1e-10)

    v = sub.add_parser("converge", help="time-dependent convergence study")
    _common(v)
    v.add_argument("--case", choices=("u1", "u2", "u3"), default="u2")
    v.add_argument("--scheme", choices=("explicit", "implicit", "cn"), default="explicit")
    v.add_argument("--levels", type=_positive_int, default=2)
    v.add_argument("--dt0", type=_positive_float, default=1e-4)
    v.add_argument("--dt-factor", type=_positive_float,
                   help="time-step divisor per level (default 4 explicit, 2 otherwise; 2 for u3)")
    v.add_argument("--steps", type=_positive_int, help="steps on the first level (default 100, 250 for u3)")
    v.add_argument("--t-final", type=_positive_float, help="common horizon; overrides --steps")
    v.add_argument("--fixed-steps", action="store_true",
                   help="run the same number of steps on every level")
    v.add_argument("--eps", type=_nonneg_float, help="TT rounding threshold (default per case)")
    v.add_argument("--rank-cap", type=_positive_int, help="rank budget of TT runs")
    v.add_argument("--pcg-tol", type=_positive_float, default=1e-8)
    v.add_argument("--pcg-maxiter", type=_positive_int, default=500)
    v.add_argument("--no-precondition", action="store_true",
                   help="plain CG instead of the dimension-split preconditioner")
    v.add_argument("--bc-time-convention", choices=("as_printed", "target_time"), default="as_printed")
    v.add_argument("--extrapolate", type=_positive_float, metavar="T",
                   help="scale measured times to horizon T")
    v.add_argument("--jobs", type=_positive_int, default=1, help="levels run in parallel")
    v.add_argument("--full", action="store_true",
                   help="full horizon T=1 (u1/u2) or 1000 fixed steps (u3) instead of desk scale")

    e = sub.add_parser("eigen", help="largest eigenvalues of A and P^-1 A")
    _common(e)
    e.add_argument("--dt", type=_nonneg_float, nargs="+", default=[1.0, 0.1, 0.01])
    e.add_argument("--iters", type=_positive_int, default=2000)
    e.add_argument("--tol", type=_positive_float, default=1e-9)
    return parser


def read_config(path: str) -> List[str]:
    """Turn ``key=value`` lines into long-flag tokens."""
    tokens: List[str] = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.replace("_", "-")
        if key in ("config", "command"):
            raise ConfigError(f"{path}:{num}: {key!r} cannot be set in a config file")
        if key.replace("-", "_") in _BOOL_FLAGS:
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(f"--{key}")
            elif value.lower() not in ("0", "false", "no", "off"):
                raise ConfigError(f"{path}:{num}: {key} expects a boolean")
            continue
        tokens.append(f"--{key}")
        tokens.extend(value.replace(",", " ").split())
    return tokens


def _expand_config(argv: List[str]) -> List[str]:
    """Insert config-file tokens right after the subcommand."""
    cfg_path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            cfg_path = argv[i + 1]
        elif tok.startswith("--config="):
            cfg_path = tok.split("=", 1)[1]
    if cfg_path is None:
        return argv
    pos = next((i for i, tok in enumerate(argv) if tok in COMMANDS), None)
    if pos is None:
        return argv
    return argv[:pos + 1] + read_config(cfg_path) + argv[pos + 1:]


def _nc_list(args, default_levels: int) -> List[int]:
    if args.nc and len(args.nc) > 1:
        return list(args.nc)
    start = args.nc[0] if args.nc else 20
    return [start * 2 ** k for k in range(default_levels)]


def _grid_options(args):
    return {"second_derivative": args.second_derivative, "interpolation": args.interpolation}


def _run(args) -> int:
    log.info("running %s", args.command)
    if args.command == "consistency":
        rep = studies.consistency_study(args.scenario, _nc_list(args, args.levels), args.backend,
                                        args.eps, **_grid_options(args))
        report.emit_report(rep, args.format, args.out)
        return EXIT_OK

    if args.command == "eigen":
        nc = list(args.nc) if args.nc else [20, 40]
        rep = studies.eigen_study(args.scenario, nc, args.dt, args.iters, args.tol, args.seed,
                                  **_grid_options(args))
        report.emit_report(rep, args.format, args.out)
        return EXIT_OK

    u3 = args.case == "u3"
    steps = args.steps or (250 if u3 else 100)
    t_final = args.t_final
    fixed = args.fixed_steps
    if args.full and t_final is None:
        if u3:
            steps, fixed = args.steps or 1000, True
        else:
            t_final = 1.0
    dt_factor = args.dt_factor or (2.0 if u3 else None)
    try:
        rep = studies.convergence_study(
            args.case, args.scenario, args.scheme, _nc_list(args, args.levels), args.dt0,
            args.eps, args.backend, args.rank_cap, t_final, steps, dt_factor,
            args.pcg_tol, args.pcg_maxiter, args.bc_time_convention, args.extrapolate,
            args.jobs, fixed, not args.no_precondition, **_grid_options(args))
    except DivergenceError as exc:
        lvl = getattr(exc, "level", None)
        where = f" on level {lvl}" if lvl is not None else ""
        sys.stderr.write(f"ttheat: diverged{where}: {exc}\n")
        return EXIT_DIVERGED
    report.emit_report(rep, args.format, args.out)
    if not rep.pcg_converged:
        bad = [r.level for r in rep.rows if not r.pcg_converged]
        sys.stderr.write(f"ttheat: PCG did not converge on level(s) {bad}\n")
        return EXIT_PCG
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
    except ConfigError as exc:
        sys.stderr.write(f"ttheat: error: {exc}\n")
        return EXIT_USAGE
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return _run(args)
    except (InvalidInputError, SingularMapError) as exc:
        sys.stderr.write(f"ttheat: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Time the compiled kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py --nc 20 40 80 --repeat 5
"""
import argparse
import timeit

import numpy as np

from ttheat import _kernels_py, grid, stencils

try:
    from ttheat import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(nc, repeat):
    g = grid.scenario_grid("variable", nc)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(g.vertex_shape)
    bands = stencils.laplacian_bands(g)
    n = g.vertex_shape[0]
    lo = -rng.random(n - 1)
    up = -rng.random(n - 1)
    di = 3.0 + rng.random(n)
    rhs = rng.standard_normal((n, n * n))
    rows = []
    impls = [("numpy", _kernels_py)] + ([("cython", _compiled)] if _compiled else [])
    for name, mod in impls:
        t_lap = _best(lambda: mod.apply_banded3(u, bands), repeat)
        t_tho = _best(lambda: mod.thomas_batched(lo, di, up, rhs), repeat)
        rows.append((name, t_lap, t_tho))
    if _compiled is not None:
        a = _kernels_py.apply_banded3(u, bands)
        b = _compiled.apply_banded3(u, bands)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-13 * np.max(np.abs(a)))
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nc", type=int, nargs="+", default=[20, 40, 80])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if _compiled is None:
        print("compiled kernels not built; timing numpy only")
    print(f"{'Nc':>4} {'impl':>7} {'laplacian_ms':>13} {'thomas_ms':>10} {'speedup_lap':>12} {'speedup_thomas':>15}")
    for nc in args.nc:
        rows = bench(nc, args.repeat)
        base = rows[0]
        for name, t_lap, t_tho in rows:
            print(f"{nc:>4} {name:>7} {1e3 * t_lap:>13.2f} {1e3 * t_tho:>10.2f} "
                  f"{base[1] / t_lap:>12.1f} {base[2] / t_tho:>15.1f}")


if __name__ == "__main__":
    main()

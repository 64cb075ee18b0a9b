"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_backends.py [--n 4001] [--steps 2000]

Both flavours are imported directly, so LEVYTRAP_BACKEND does not matter here.
"""
import argparse
import time

import numpy as np

from levytrap import _loops
from levytrap.grid import build_grid
from levytrap.operators import cauchy_operator, make_potential
from levytrap.spectral import solve_finite_brownian_ground


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=50.0)
    ap.add_argument("--ppu", type=int, default=40)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    grid = build_grid(args.a, args.ppu)
    op = cauchy_operator(grid)
    w = np.ascontiguousarray(op.w)
    f = np.exp(-grid.x**2)

    ref = _loops.toeplitz_matvec_fft(w, f)
    _loops._toeplitz_matvec_numba(w, f)  # compile
    rows = []
    for name, fn in (("numba", lambda: _loops._toeplitz_matvec_numba(w, f)),
                     ("numpy", lambda: _loops._toeplitz_matvec_numpy(w, f)),
                     ("fft", lambda: _loops.toeplitz_matvec_fft(w, f))):
        out = fn()
        rows.append(("toeplitz_matvec", name, best_of(fn, args.repeat), float(np.abs(out - ref).max())))

    g = solve_finite_brownian_ground(20.0)
    s = g.field(grid).values
    v = make_potential("finite", 20.0).cell_average(grid)
    act = s > 0
    rho0 = np.exp(-grid.x**2 / 8)
    rho0 /= grid.h * rho0.sum()
    run = lambda impl: impl(rho0.copy(), s, v, g.E1, grid.h, 1e-5, args.steps, act, 1e-8)  # noqa: E731
    run(_loops._brownian_transport_numba)
    ref_rho = run(_loops._brownian_transport_numpy)[0]
    for name, impl in (("numba", _loops._brownian_transport_numba), ("numpy", _loops._brownian_transport_numpy)):
        out = run(impl)[0]
        rows.append((f"transport x{args.steps}", name, best_of(lambda: run(impl), args.repeat),
                     float(np.abs(out - ref_rho).max())))

    print(f"n = {grid.n}")
    print(f"{'kernel':<22}{'backend':<8}{'seconds':>12}{'max |diff|':>14}")
    for k, b, t, d in rows:
        print(f"{k:<22}{b:<8}{t:>12.5f}{d:>14.2e}")


if __name__ == "__main__":
    main()

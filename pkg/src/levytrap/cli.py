"""levytrap command line: spectra, figure curve data, kernels, scenario runs, comparisons."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import approximants as ap
from .grid import Field, GridError, build_grid, normalize
from .kernels import kernel_mesh_csv
from .operators import make_potential
from .spectral import (EigenSolveError, MemoryBudgetError, brownian_infinite_basis,
                       cauchy_infinite_well_spectrum, discretize_hamiltonian, ground_state,
                       lowest_eigenpairs, solve_finite_brownian_ground)
from .transport import ScenarioConfig, bundled_scenarios, load_scenario, run_scenario

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7")


class CliError(Exception):
    def __init__(self, category, msg):
        super().__init__(msg)
        self.category = category


class Outputs:
    """Collects written files and writes the run manifest last."""

    def __init__(self, directory, command, config):
        self.dir = directory
        os.makedirs(directory, exist_ok=True)
        self.command, self.config = command, config
        self.files = []
        self.grids = {}
        self.t0 = time.perf_counter()

    def path(self, name):
        self.files.append(name)
        full = os.path.join(self.dir, name)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        return full

    def field(self, name, fld: Field):
        fld.to_csv(self.path(name))
        self.grids[name] = {"a": fld.grid.a, "h": fld.grid.h, "n": fld.grid.n}

    def text(self, name, text):
        with open(self.path(name), "w", encoding="ascii") as fh:
            fh.write(text)

    def close(self):
        manifest = {
            "command": self.command,
            "config": self.config,
            "version": __version__,
            "grids": self.grids,
            "wall_clock_s": round(time.perf_counter() - self.t0, 3),
            "outputs": sorted(self.files),
        }
        with open(os.path.join(self.dir, "manifest.json"), "w", encoding="ascii") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _eig_table(energies, start=1):
    return "n,E_n\n" + "".join(f"{i},{e:.17g}\n" for i, e in enumerate(energies, start))


# -- spectrum ------------------------------------------------------------------

def cmd_spectrum(args, out: Outputs):
    if args.well == "finite" and args.v0 is None:
        raise CliError("config", "--v0 is required for a finite well")
    V = make_potential(args.well, args.v0)
    if args.driver == "brownian" and V.infinite:
        grid = build_grid(1, args.ppu)
        pairs = [brownian_infinite_basis(n, grid) for n in range(1, args.k + 1)]
        out.text("eigenvalues.csv", _eig_table([p.energy for p in pairs]))
        for p in pairs:
            out.field(f"state_{p.index:02d}.csv", p.state)
        return [p.energy for p in pairs]
    if args.driver == "cauchy" and V.infinite:
        spec = cauchy_infinite_well_spectrum(args.k, tuple(args.ppus))
        out.text("eigenvalues.csv", _eig_table(spec.energies))
        raw = "ppu," + ",".join(f"E_{n}" for n in range(1, args.k + 1)) + "\n"
        raw += "".join(f"{p}," + ",".join(f"{e:.17g}" for e in spec.raw[p]) + "\n" for p in spec.ppus)
        out.text("eigenvalues_by_resolution.csv", raw)
        H = discretize_hamiltonian("cauchy", V, build_grid(1, max(args.ppus)))
        for p in lowest_eigenpairs(H, min(args.k, 5)):
            out.field(f"state_{p.index:02d}.csv", p.state)
        return list(spec.energies)
    grid = build_grid(args.a, args.ppu)
    H = discretize_hamiltonian(args.driver, V, grid)
    S = lowest_eigenpairs(H, args.k)
    energies = list(S.energies)
    if args.driver == "brownian":
        g = solve_finite_brownian_ground(V.V0)
        energies[0] = g.E1
        out.field("state_01_closed_form.csv", normalize(g.field(grid), "L2"))
    out.text("eigenvalues.csv", _eig_table(energies))
    for p in S:
        out.field(f"state_{p.index:02d}.csv", p.state)
    return energies


# -- figures -----------------------------------------------------------------

def _scenario_figure(names, out: Outputs):
    for name in names:
        res = run_scenario(load_scenario(name))
        out.text(f"{name}/config.cfg", res.config.dump())
        out.field(f"{name}/rho_star.csv", res.rho_star)
        for s in res.trace.snapshots:
            out.field(f"{name}/rho_{s.step:07d}.csv", s.field)
        out.text(f"{name}/index.csv", "k,t,L1_to_rho_star\n" + "".join(
            f"{s.step},{s.time!r},{s.distance!r}\n" for s in res.trace.snapshots))


def _fn_field(grid, fn):
    return Field(grid, fn(grid.x))


def cmd_figure(args, out: Outputs):
    name = args.name
    grid = build_grid(args.a, args.ppu)
    if name == "fig1":
        out.field("cos.csv", _fn_field(grid, ap.cosine_state))
        for V0 in (5, 20, 100, 500, 5000, 50000):
            g = solve_finite_brownian_ground(V0)
            out.field(f"V0_{V0}.csv", g.field(grid))
    elif name == "fig2":
        _scenario_figure(("fig2_left", "fig2_right"), out)
    elif name == "fig3":
        out.field("cos.csv", _fn_field(grid, ap.cosine_state))
        out.field("kwasnicki_n1.csv", _fn_field(grid, lambda x: ap.kwasnicki_eigenfunction(1, x)))
        for V0 in (5, 20, 100, 500):
            out.field(f"V0_{V0}.csv", ground_state("cauchy", make_potential("finite", V0), grid).state)
    elif name == "fig4":
        _scenario_figure(("fig4_left", "fig4_right"), out)
    elif name == "fig5":
        _scenario_figure(("fig5_left", "fig5_right"), out)
    elif name == "fig6":
        out.field("semicircle_cosine.csv", _fn_field(grid, ap.semicircle_cosine_state))
        out.field("kwasnicki_n1.csv", _fn_field(grid, lambda x: ap.kwasnicki_eigenfunction(1, x)))
        for V0 in (5000, 10000, 20000):
            out.field(f"V0_{V0}.csv", ground_state("cauchy", make_potential("finite", V0), grid).state)
    elif name == "fig7":
        finite = ground_state("cauchy", make_potential("finite", 500), grid).state
        near = (grid.x >= 0.8 - 1e-12) & (grid.x <= 1.2 + 1e-12)
        x = grid.x[near]
        coef = ap.C_NORM * np.sqrt(2 * np.cos(ap.ALPHA))
        law = coef * np.sqrt(np.clip(1 - np.abs(x), 0, None))
        cols = np.column_stack((x, finite.values[near], ap.kwasnicki_eigenfunction(1, x), law))
        out.text("boundary_+1.csv", "x,finite_V0_500,kwasnicki_n1,sqrt_law\n" + "".join(
            ",".join(f"{v:.17g}" for v in row) + "\n" for row in cols))
        out.field("finite_V0_500.csv", finite)
    else:
        raise CliError("config", f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")


# -- kernel / evolve / compare ---------------------------------------------------

def cmd_kernel(args, out: Outputs):
    if args.t <= 0:
        raise CliError("config", "--t must be positive")
    out.text(f"{args.which}_mesh.csv", kernel_mesh_csv(args.t, args.mesh, args.which))


def cmd_evolve(args, out: Outputs):
    if args.config:
        with open(args.config, encoding="ascii") as fh:
            cfg = ScenarioConfig.parse(fh.read(), os.path.splitext(os.path.basename(args.config))[0])
    else:
        cfg = load_scenario(args.scenario)
    res = run_scenario(cfg)
    out.text("config.cfg", cfg.dump())
    out.field("rho_star.csv", res.rho_star)
    for s in res.trace.snapshots:
        out.field(f"rho_{s.step:07d}.csv", s.field)
    out.text("index.csv", "k,t,L1_to_rho_star\n" + "".join(
        f"{s.step},{s.time!r},{s.distance!r}\n" for s in res.trace.snapshots))
    return res


def cmd_compare(args, out: Outputs):
    ref_name = args.reference
    if ref_name == "numeric-infinite":
        grid = build_grid(1, 800 if args.ppu is None else args.ppu)
        ref = ground_state("cauchy", make_potential("infinite"), grid).state
    elif ref_name.startswith("finite:"):
        V0 = float(ref_name.split(":", 1)[1])
        grid = build_grid(args.a, 40 if args.ppu is None else args.ppu)
        ref = ground_state("cauchy", make_potential("finite", V0), grid).state
    else:
        raise CliError("config", "reference must be 'numeric-infinite' or 'finite:<V0>'")
    report = ap.compare_ground_states(ap.default_candidates(), ref)
    out.text("comparison.csv", report.to_csv())
    out.field("reference.csv", ref)
    return report


# -- entry point -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors as one machine-parsable line, like every other failure."""

    def error(self, message):
        self.exit(2, f"error: usage: {message}\n")


def build_parser():
    p = _Parser(prog="levytrap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, a=50.0, ppu=40):
        sp.add_argument("--out", default=None, help="output directory (default: ./out/<command>)")
        sp.add_argument("--a", type=float, default=a, help="grid cutoff half-width")
        sp.add_argument("--ppu", type=int, default=ppu, help="grid points per unit length")

    s = sub.add_parser("spectrum", help="eigenvalue table and eigenfunctions")
    s.add_argument("--driver", choices=("brownian", "cauchy"), required=True)
    s.add_argument("--well", choices=("finite", "infinite"), required=True)
    s.add_argument("--v0", type=float, default=None)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--ppus", type=int, nargs="+", default=[200, 400, 800],
                   help="resolutions extrapolated for the Cauchy hard-wall spectrum")
    common(s)

    f = sub.add_parser("figure", help="curve data for one figure")
    f.add_argument("name", choices=FIGURES)
    common(f)

    k = sub.add_parser("kernel", help="hard-wall Brownian kernel on a mesh")
    k.add_argument("--t", type=float, required=True)
    k.add_argument("--mesh", type=int, default=101)
    k.add_argument("--which", choices=("k", "p"), default="k")
    k.add_argument("--out", default=None)

    e = sub.add_parser("evolve", help="run a transport scenario")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--scenario", default="fig2_left", choices=bundled_scenarios())
    g.add_argument("--config", default=None, help="path to a key = value scenario file")
    e.add_argument("--out", default=None)

    c = sub.add_parser("compare", help="approximants versus a numeric ground state")
    c.add_argument("--reference", default="numeric-infinite")
    c.add_argument("--out", default=None)
    c.add_argument("--a", type=float, default=50.0)
    c.add_argument("--ppu", type=int, default=None,
                   help="grid resolution (default 800 on [-1, 1], 40 for finite wells)")
    return p


COMMANDS = {"spectrum": cmd_spectrum, "figure": cmd_figure, "kernel": cmd_kernel,
            "evolve": cmd_evolve, "compare": cmd_compare}


def _category(exc):
    if isinstance(exc, CliError):
        return exc.category
    if isinstance(exc, (GridError,)):
        return "grid"
    if isinstance(exc, MemoryBudgetError):
        return "memory"
    if isinstance(exc, EigenSolveError):
        return "numeric"
    if isinstance(exc, (OSError,)):
        return "io"
    if isinstance(exc, (ValueError, KeyError)):
        return "config"
    return "internal"


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out or os.path.join("out", args.command + (f"_{args.name}" if args.command == "figure" else ""))
    config = {k: v for k, v in vars(args).items() if k not in ("out",)}
    try:
        out = Outputs(out_dir, args.command, config)
        result = COMMANDS[args.command](args, out)
        out.close()
    except Exception as exc:  # noqa: BLE001 - converted to a one-line error
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {_category(exc)}: {msg}", file=sys.stderr)
        return 1
    if args.command == "spectrum":
        for i, e in enumerate(result, 1):
            print(f"E_{i} = {e:.6f}")
    elif args.command == "compare":
        for r in result.rows:
            print(f"{r.name}: sup={r.sup:.6g} L2={r.l2:.6g}")
    print(f"wrote {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

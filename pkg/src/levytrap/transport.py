"""Density dynamics d rho/dt = -s H (rho / s), s the ground state, and the bundled scenarios."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import _loops
from .evolution import EvolutionTrace
from .grid import DegenerateFieldError, Field, Grid, build_grid, normalize, trapezoid, truncated_gaussian
from .operators import LinearOperator, make_potential
from .spectral import discretize_hamiltonian, ground_state, solve_finite_brownian_ground

NEGATIVE_TOL = 1e-8


def doob_pdf(psi: Field, sqrt_rho_star: Field) -> Field:
    """rho = psi * sqrt(rho*), normalized to unit mass."""
    if not psi.grid.same_as(sqrt_rho_star.grid):
        raise ValueError("fields live on different grids")
    prod = Field(psi.grid, psi.values * sqrt_rho_star.values)
    if not np.any(prod.values != 0):
        raise DegenerateFieldError("zero product field")
    return normalize(prod, "L1")


def active_nodes(sqrt_rho_star: Field, H: LinearOperator, floor: float) -> np.ndarray:
    s = sqrt_rho_star.values
    return (s >= floor * s.max()) & (s > 0) & H.nodes


@dataclass
class StepStats:
    steps: int = 0
    flagged: int = 0          # entries below -NEGATIVE_TOL * max before clipping
    clipped_mass: float = 0.0  # total mass removed by clipping
    worst_clip_fraction: float = 0.0


def _step_arrays(rho, s, act, H, dt, stats):
    h = H.grid.h
    psi = np.zeros_like(rho)
    psi[act] = rho[act] / s[act]
    hpsi = np.zeros_like(rho)
    hpsi[H.lo:H.hi] = H.apply_array(psi[H.lo:H.hi])
    new = rho.copy()
    new[act] = rho[act] - dt * s[act] * hpsi[act]
    neg = new < 0
    if neg.any():
        lost = -h * new[neg].sum()
        if stats is not None:
            stats.flagged += int(np.count_nonzero(new < -NEGATIVE_TOL * rho.max()))
            stats.clipped_mass += lost
            stats.worst_clip_fraction = max(stats.worst_clip_fraction, lost)
        new[neg] = 0.0
    mass = trapezoid(new, h)
    if stats is not None:
        stats.steps += 1
    return new / mass


def transport_step(rho: Field, sqrt_rho_star: Field, H: LinearOperator, dt: float,
                   floor: float = 1e-12, stats: StepStats | None = None) -> Field:
    """One explicit step rho <- N(rho - dt * s * H(rho / s)).

    ``H`` must already include the shift by its ground energy. Nodes where
    s < floor * max(s) are frozen. Negative entries are clipped and counted
    in ``stats``.
    """
    act = active_nodes(sqrt_rho_star, H, floor)
    new = _step_arrays(rho.values, sqrt_rho_star.values, act, H, dt, stats)
    return Field(rho.grid, new, "L1")


# -- scenarios -----------------------------------------------------------------

_FLOAT_KEYS = {"V0", "dt", "sigma", "mu", "trunc", "a", "floor"}
_INT_KEYS = {"steps", "ppu"}


@dataclass(frozen=True)
class ScenarioConfig:
    driver: str
    V0: float
    dt: float
    trunc: float
    steps: int
    snapshots: tuple
    sigma: float = 2.0
    mu: float = 0.0
    a: float = 50.0
    ppu: int = 40
    floor: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.driver not in ("brownian", "cauchy"):
            raise ValueError("driver must be 'brownian' or 'cauchy'")
        if not (self.V0 > 0 and self.dt > 0 and self.sigma > 0):
            raise ValueError("V0, dt and sigma must be positive")
        snaps = tuple(int(s) for s in self.snapshots)
        if list(snaps) != sorted(snaps) or (snaps and snaps[-1] > self.steps):
            raise ValueError("snapshot steps must be sorted and not exceed steps")
        if self.trunc > self.a:
            raise ValueError("truncation half-width exceeds the grid cutoff")
        object.__setattr__(self, "snapshots", snaps)

    @property
    def ground_floor(self) -> float:
        """Division guard: Brownian tails are exact, so only underflow is masked."""
        if self.floor is not None:
            return self.floor
        return 1e-300 if self.driver == "brownian" else 1e-12

    @classmethod
    def parse(cls, text: str, name: str = "") -> "ScenarioConfig":
        kw = {"name": name}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = (p.strip() for p in line.split("=", 1))
            if key == "driver":
                kw[key] = val.lower()
            elif key == "name":
                kw[key] = val
            elif key == "snapshots":
                kw[key] = tuple(int(float(v)) for v in val.split(",") if v.strip())
            elif key in _FLOAT_KEYS:
                kw[key] = float(val)
            elif key in _INT_KEYS:
                kw[key] = int(float(val))
            else:
                raise ValueError(f"unknown config key {key!r}")
        missing = {"driver", "V0", "dt", "trunc", "steps", "snapshots"} - kw.keys()
        if missing:
            raise ValueError(f"config is missing {sorted(missing)}")
        return cls(**kw)

    def dump(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None or (f.name == "name" and not v):
                continue
            if f.name == "snapshots":
                v = ", ".join(str(s) for s in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def grid(self) -> Grid:
        return build_grid(max(self.a, self.trunc), self.ppu)


def bundled_scenarios() -> list[str]:
    files = resources.files("levytrap").joinpath("scenarios")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".cfg"))


def load_scenario(name: str) -> ScenarioConfig:
    path = resources.files("levytrap").joinpath("scenarios").joinpath(f"{name}.cfg")
    if not path.is_file():
        raise KeyError(f"no bundled scenario {name!r}")
    return ScenarioConfig.parse(path.read_text(), name)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trace: EvolutionTrace
    rho_star: Field
    sqrt_rho_star: Field
    energy: float
    stats: StepStats
    l1_history: list = field(default_factory=list)  # (step, L1 distance) at check points
    first_below: int | None = None

    def l1_at(self, step) -> float:
        return l1_distance(self.trace.at_step(step), self.rho_star)


def l1_distance(f: Field, g: Field) -> float:
    return trapezoid(np.abs(f.values - g.values), f.grid.h)


def scenario_ground(cfg: ScenarioConfig, grid: Grid):
    """(sqrt rho*, E1, H shifted by E1) for a scenario."""
    V = make_potential("finite", cfg.V0)
    if cfg.driver == "brownian":
        g = solve_finite_brownian_ground(cfg.V0)
        s = g.field(grid)
        E = g.E1
    else:
        pair = ground_state("cauchy", V, grid)
        s, E = pair.state, pair.energy
    H = discretize_hamiltonian(cfg.driver, V, grid, shift=E)
    return s, E, H


def run_scenario(cfg: ScenarioConfig, threshold: float | None = None, horizon: int | None = None,
                 check_every: int | None = None, stop_early: bool = True) -> ScenarioResult:
    """Evolve the truncated gaussian and record the configured snapshots.

    With ``threshold`` set, the L1 distance to rho* is also checked every
    ``check_every`` steps and the run continues up to ``horizon`` steps
    (default: the configured step count) to find the first check point
    below the threshold; with ``stop_early`` the run ends there once the
    configured snapshots are done.
    """
    grid = cfg.grid()
    s, E, H = scenario_ground(cfg, grid)
    rho_star = normalize(Field(grid, s.values**2), "L1")
    act = active_nodes(s, H, cfg.ground_floor)
    rho = truncated_gaussian(grid, cfg.mu, cfg.sigma, cfg.trunc).values.copy()
    stats = StepStats()
    trace = EvolutionTrace(cfg.dt)
    trace.add(0, Field(grid, rho, "L1"), l1_distance(Field(grid, rho), rho_star))

    horizon = max(horizon or cfg.steps, cfg.steps)
    if check_every is None:
        check_every = 100 if cfg.driver == "brownian" else 10
    marks = set(cfg.snapshots)
    if threshold is not None:
        marks.update(range(check_every, horizon + 1, check_every))
    else:
        horizon = cfg.steps
    marks = sorted(m for m in marks if 0 < m <= horizon)

    history = []
    first_below = None
    step = 0
    svals = s.values
    vcell = make_potential("finite", cfg.V0).cell_average(grid)
    for mark in marks:
        n = mark - step
        if cfg.driver == "brownian":
            rho, flagged, clipped = _loops.brownian_transport(rho, svals, vcell, E, grid.h, cfg.dt, n, act,
                                                              NEGATIVE_TOL)
            stats.steps += n
            stats.flagged += flagged
            stats.clipped_mass += clipped
        else:
            for _ in range(n):
                rho = _step_arrays(rho, svals, act, H, cfg.dt, stats)
        step = mark
        cur = Field(grid, rho, "L1")
        dist = l1_distance(cur, rho_star)
        if threshold is not None and step % check_every == 0:
            history.append((step, dist))
            if first_below is None and dist < threshold:
                first_below = step
        if step in cfg.snapshots:
            trace.add(step, cur, dist)
        if stop_early and first_below is not None and step >= cfg.steps:
            break
    trace.steps_taken = step
    return ScenarioResult(cfg, trace, rho_star, s, E, stats, history, first_below)

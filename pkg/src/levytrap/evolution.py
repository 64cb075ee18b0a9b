"""Semigroup propagation exp(-tH) by explicit Euler and by Strang splitting."""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erf, erfc

from .grid import DegenerateFieldError, Field, Grid, trapezoid
from .operators import LinearOperator, Potential

VIRTUAL_NODES = 256
WEIGHT_CUTOFF = 1e-17


class StabilityWarning(UserWarning):
    """Explicit step larger than the operator's stability bound."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, distance=None):
        super().__init__(msg)
        self.distance = distance


@dataclass
class Snapshot:
    step: int
    time: float
    field: Field
    distance: float | None = None


@dataclass
class EvolutionTrace:
    dt: float
    snapshots: list = field(default_factory=list)
    converged: bool = False
    final_increment: float | None = None
    steps_taken: int = 0
    diagnostics: dict = field(default_factory=dict)

    def add(self, step, fld, distance=None):
        if self.snapshots and step <= self.snapshots[-1].step:
            raise ValueError("snapshot steps must increase")
        self.snapshots.append(Snapshot(step, step * self.dt, fld, distance))

    @property
    def steps(self):
        return [s.step for s in self.snapshots]

    @property
    def times(self):
        return [s.time for s in self.snapshots]

    @property
    def fields(self):
        return [s.field for s in self.snapshots]

    @property
    def final(self) -> Field:
        return self.snapshots[-1].field

    def at_step(self, step) -> Field:
        for s in self.snapshots:
            if s.step == step:
                return s.field
        raise KeyError(step)

    def write(self, directory, prefix="snapshot"):
        """One Field CSV per snapshot plus ``index.csv`` with k,t,distance."""
        os.makedirs(directory, exist_ok=True)
        names = []
        lines = ["k,t,distance"]
        for s in self.snapshots:
            name = f"{prefix}_{s.step:07d}.csv"
            s.field.to_csv(os.path.join(directory, name))
            names.append(name)
            dist = "" if s.distance is None else repr(float(s.distance))
            lines.append(f"{s.step},{s.time!r},{dist}")
        with open(os.path.join(directory, "index.csv"), "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
        return names + ["index.csv"]


# -- Euler ---------------------------------------------------------------------

def euler_step(psi: Field, H: LinearOperator, dt: float) -> Field:
    """psi - dt * H psi, no normalization."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    bound = H.gershgorin()
    if dt * bound > 1.0:
        warnings.warn(f"dt={dt:g} exceeds the explicit stability bound 1/{bound:.4g}",
                      StabilityWarning, stacklevel=2)
    return Field(psi.grid, psi.values - dt * H.apply(psi).values)


# -- kinetic factors ----------------------------------------------------------

def _poisson(z, dt):
    return (dt / np.pi) / (z * z + dt * dt)


def _poisson_tail(d, dt):
    """Mass of the Poisson kernel beyond distance d."""
    return (0.5 * np.pi - np.arctan(d / dt)) / np.pi


def _poisson_m2(b, dt):
    """Second moment of the Poisson kernel over |z| < b."""
    return (dt / np.pi) * (2 * b - 2 * dt * np.arctan(b / dt))


def _heat(z, dt):
    return np.exp(-z * z / (4 * dt)) / np.sqrt(4 * np.pi * dt)


def _heat_tail(d, dt):
    return 0.5 * erfc(d / (2 * np.sqrt(dt)))


def _heat_m2(b, dt):
    r = b / (2 * np.sqrt(dt))
    return 2 * dt * (erf(r) - (b / np.sqrt(np.pi * dt)) * np.exp(-r * r))


_KERNELS = {
    "cauchy": (_poisson, _poisson_tail, _poisson_m2),
    "brownian": (_heat, _heat_tail, _heat_m2),
}


class KineticFactor:
    """Free-motion transition kernel over one step dt, discretized on the grid.

    Node weights are h*kernel(z) for z != 0. A three-point stencil makes the
    lattice second moment over the stencil window equal the kernel's,
    and the diagonal takes whatever mass is left after the neighbours and the
    exterior (killed) part are accounted for. The resulting matrix is
    symmetric, nonnegative for moderate dt, and agrees with I - dt*T to first
    order in dt for the matching generator T.
    """

    def __init__(self, kind: str, grid: Grid, dt: float, restricted: bool = False):
        if kind not in _KERNELS:
            raise ValueError("kind must be 'brownian' or 'cauchy'")
        if dt <= 0:
            raise ValueError("dt must be positive")
        kern, tail, m2 = _KERNELS[kind]
        self.kind, self.grid, self.dt, self.restricted = kind, grid, dt, restricted
        h = grid.h
        if restricted:
            idx = np.flatnonzero(grid.interior)
            lo, hi = int(idx[0]), int(idx[-1]) + 1
        else:
            lo, hi = 0, grid.n
        m = hi - lo
        xs = grid.x[lo:hi]
        k = np.arange(m, dtype=np.float64)
        w = np.zeros(m)
        w[1:] = h * kern(k[1:] * h, dt)
        # Top up the second moment over the whole stencil window, not just the
        # centre cell: node weights alone badly miss it once the kernel is
        # narrower than a few cells.
        big = np.flatnonzero(w > WEIGHT_CUTOFF)
        reach = int(big[-1]) if big.size else 0
        kh = k[1:reach + 1] * h
        c = (m2((reach + 0.5) * h, dt) - 2 * np.dot(w[1:reach + 1], kh * kh)) / (2 * h * h)
        S = np.cumsum(w)
        i = np.arange(m)
        inside = S[i] + S[m - 1 - i]
        if restricted:
            outside = self._lattice_exterior(xs, h, dt, kern, tail)
        else:
            A = grid.a + h / 2
            outside = tail(A - xs, dt) + tail(A + xs, dt)
        D = 1.0 - inside - outside - 2 * c
        if m > 1:
            w[1] += c
        big = np.flatnonzero(w > WEIGHT_CUTOFF)
        band = int(big[-1]) if big.size else 0
        w = w[: max(band + 1, 2)]
        # K = D + Toeplitz(w), stored in the operator form D - Toeplitz(-w).
        self.operator = LinearOperator(grid, lo, hi, D, -w, 1.0, f"Kinetic({kind})", band,
                                       exterior_zero=restricted)
        self.min_diagonal = float(D.min())

    @staticmethod
    def _lattice_exterior(xs, h, dt, kern, tail):
        total = np.zeros(xs.size)
        j = np.arange(VIRTUAL_NODES, dtype=np.float64)
        for side in (1.0 - xs, 1.0 + xs):
            k0 = np.rint(side / h)
            d = (k0[:, None] + j[None, :]) * h
            total += h * kern(d, dt).sum(axis=1)
            total += tail((k0 + VIRTUAL_NODES - 0.5) * h, dt)
        return total

    def apply_array(self, f, method="auto"):
        return self.operator.apply_array(f, method)

    def apply(self, f: Field, method="auto") -> Field:
        lo, hi = self.operator.lo, self.operator.hi
        out = np.zeros(f.grid.n)
        out[lo:hi] = self.operator.apply_array(f.values[lo:hi], method)
        return Field(f.grid, out)


@lru_cache(maxsize=32)
def kinetic_factor(kind: str, grid: Grid, dt: float, restricted: bool = False) -> KineticFactor:
    return KineticFactor(kind, grid, dt, restricted)


@lru_cache(maxsize=32)
def _half_potential(V: Potential, grid: Grid, dt: float):
    return np.exp(-0.5 * dt * V.cell_average(grid))


class StrangPropagator:
    """exp(-V dt/2) K_dt exp(-V dt/2), with the block/exterior handling fixed."""

    def __init__(self, kind: str, V: Potential, grid: Grid, dt: float, method: str = "auto"):
        self.kind, self.V, self.grid, self.dt, self.method = kind, V, grid, dt, method
        self.K = kinetic_factor(kind, grid, dt, V.infinite)
        op = self.K.operator
        self.lo, self.hi = op.lo, op.hi
        self.half = None if V.infinite else _half_potential(V, grid, dt)

    def step_array(self, f: np.ndarray) -> np.ndarray:
        """One step on block-length values."""
        if self.half is None:
            return self.K.apply_array(f, self.method)
        return self.half * self.K.apply_array(self.half * f, self.method)

    def step(self, psi: Field) -> Field:
        out = np.zeros(self.grid.n)
        out[self.lo:self.hi] = self.step_array(psi.values[self.lo:self.hi])
        return Field(self.grid, out)


def strang_step(psi: Field, T_kind: str, V: Potential, dt: float, method: str = "auto") -> Field:
    """One symmetric splitting step of exp(-(T + V) dt)."""
    return StrangPropagator(T_kind, V, psi.grid, dt, method).step(psi)


# -- renormalized relaxation ---------------------------------------------------

def relax(psi0: Field, T_kind: str, V: Potential, dt: float, max_steps: int = 100_000,
          tol: float = 1e-10, reference: Field | None = None, record_every: int | None = None,
          propagator: str = "strang", H: LinearOperator | None = None) -> EvolutionTrace:
    """Iterate psi <- normalize_L2(step(psi)) until the L2 increment drops below tol.

    ``propagator='euler'`` needs the discrete Hamiltonian ``H``. The returned
    trace always holds the initial and final iterates; ``converged`` is False
    if ``max_steps`` ran out.
    """
    grid = psi0.grid
    if propagator == "strang":
        prop = StrangPropagator(T_kind, V, grid, dt)
        lo, hi = prop.lo, prop.hi
        step_fn = prop.step_array
    elif propagator == "euler":
        if H is None:
            raise ValueError("euler relaxation needs the Hamiltonian H")
        if dt * H.gershgorin() > 1.0:
            warnings.warn("dt exceeds the explicit stability bound", StabilityWarning, stacklevel=2)
        lo, hi = H.lo, H.hi
        step_fn = lambda f: f - dt * H.apply_array(f)  # noqa: E731
    else:
        raise ValueError("propagator must be 'strang' or 'euler'")

    v0 = psi0.values
    block = np.array(v0[lo:hi])
    if not np.any(block > 0):
        raise DegenerateFieldError("initial state must be positive somewhere on the active nodes")
    h = grid.h
    full = np.zeros(grid.n)

    def as_field(b):
        full[:] = 0.0
        full[lo:hi] = b
        return Field(grid, full, "L2")

    def l2(b):
        # Block ends are interior nodes unless the block spans the grid.
        if lo == 0 and hi == grid.n:
            return np.sqrt(trapezoid(b * b, h))
        return np.sqrt(h * np.dot(b, b))

    nrm = l2(block)
    if not nrm > 0:
        raise DegenerateFieldError()
    block /= nrm
    trace = EvolutionTrace(dt)

    def dist(b):
        if reference is None:
            return None
        return float(np.sqrt(h * np.sum((b - reference.values[lo:hi]) ** 2)))

    trace.add(0, as_field(block), dist(block))
    inc = np.inf
    k = 0
    for k in range(1, max_steps + 1):
        new = step_fn(block)
        nrm = l2(new)
        if not np.isfinite(nrm) or nrm == 0:
            raise DegenerateFieldError("iterate collapsed to zero")
        new /= nrm
        inc = l2(new - block)
        block = new
        if inc < tol:
            break
        if record_every and k % record_every == 0:
            trace.add(k, as_field(block), dist(block))
    if trace.snapshots[-1].step != k:
        trace.add(k, as_field(block), dist(block))
    trace.converged = bool(inc < tol)
    trace.final_increment = float(inc)
    trace.steps_taken = k
    return trace

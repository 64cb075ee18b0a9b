"""Closed-form Brownian well spectra and numerical ground states of discrete Hamiltonians."""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.optimize import bisect

from .evolution import ConvergenceError, relax
from .grid import Field, Grid, build_grid, normalize, trapezoid
from .operators import (LinearOperator, Potential, cauchy_operator, cauchy_restricted_operator,
                        make_potential)

DEFAULT_MEMORY_BUDGET = 1 << 30  # bytes for one dense matrix


class MemoryBudgetError(MemoryError):
    pass


class EigenSolveError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class SpectralPair:
    index: int
    energy: float
    state: Field | np.ndarray
    residual: float | None = None
    iterations: int | None = None


class SpectralSet:
    def __init__(self, pairs):
        self.pairs = list(pairs)

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def __iter__(self):
        return iter(self.pairs)

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.pairs])

    @property
    def ground(self) -> SpectralPair:
        return self.pairs[0]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("n,E_n\n")
        for p in self.pairs:
            buf.write(f"{p.index},{p.energy:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="ascii") as fh:
                fh.write(text)
        return text


# -- Brownian wells in closed form -------------------------------------------

def brownian_infinite_basis(n: int, grid: Grid | None = None) -> SpectralPair:
    """Dirichlet eigenpair of -d²/dx² on (-1, 1): cosine for odd n, sine for even n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = grid or build_grid(1, 200)
    x = grid.x
    arg = n * np.pi * x / 2
    vals = np.cos(arg) if n % 2 else np.sin(arg)
    vals = np.where(np.abs(x) <= 1, vals, 0.0)
    # Endpoints are exact zeros; avoid a ~1e-16 residue there.
    vals[np.isclose(np.abs(x), 1.0, atol=1e-12)] = 0.0
    return SpectralPair(n, (n * np.pi / 2) ** 2, normalize(Field(grid, vals), "L2"))


@dataclass(frozen=True)
class FiniteWellGround:
    """Ground state of -d²/dx² + V0 * 1{|x| >= 1}, exact up to root-finding."""

    V0: float
    E1: float
    kappa: float
    k: float
    A: float

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        ax = np.abs(x)
        inside = self.A * np.cos(self.kappa * x)
        outside = self.A * np.cos(self.kappa) * np.exp(-self.k * (ax - 1.0))
        return np.where(ax <= 1.0, inside, outside)

    def field(self, grid: Grid) -> Field:
        return Field(grid, self(grid.x))

    def density(self, grid: Grid) -> Field:
        return normalize(Field(grid, self(grid.x) ** 2), "L1")


def solve_finite_brownian_ground(V0: float, xtol: float = 2e-16) -> FiniteWellGround:
    """Smallest root of kappa*tan(kappa) = sqrt(V0 - kappa²) by bisection."""
    if not V0 > 0:
        raise ValueError("V0 must be positive")
    f = lambda kap: kap * np.tan(kap) - np.sqrt(max(V0 - kap * kap, 0.0))  # noqa: E731
    hi = min(np.sqrt(V0), np.pi / 2 * (1 - 1e-15))
    kap = bisect(f, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=400)
    E = kap * kap
    k = np.sqrt(V0 - E)
    return FiniteWellGround(float(V0), float(E), float(kap), float(k), float(np.sqrt(k / (k + 1))))


# -- discrete Hamiltonians -----------------------------------------------------

def kinetic_operator(T_kind: str, grid: Grid, restricted: bool) -> LinearOperator:
    """Positive kinetic operator: -Δ_h (Brownian) or (-Δ)^{1/2} (Cauchy)."""
    T_kind = T_kind.lower()
    if T_kind == "cauchy":
        return cauchy_restricted_operator(grid) if restricted else cauchy_operator(grid)
    if T_kind == "brownian":
        if restricted:
            idx = np.flatnonzero(grid.interior)
            lo, hi = int(idx[0]), int(idx[-1]) + 1
        else:
            lo, hi = 0, grid.n
        h2 = grid.h**2
        w = np.array([0.0, 1.0 / h2])
        return LinearOperator(grid, lo, hi, np.full(hi - lo, 2.0 / h2), w, 1.0,
                              "NegLaplacian", 1, exterior_zero=restricted)
    raise ValueError("T_kind must be 'brownian' or 'cauchy'")


def discretize_hamiltonian(T_kind: str, V: Potential, grid: Grid, shift: float = 0.0,
                           memory_budget: int = DEFAULT_MEMORY_BUDGET) -> LinearOperator:
    """H = T + V - shift as a structured symmetric operator.

    Hard walls restrict the block to the interior nodes. The finite step
    uses cell-averaged node values (V0/2 on the nodes at +-1).
    """
    T = kinetic_operator(T_kind, grid, V.infinite)
    if T.band > 1 and 8 * T.size**2 > memory_budget:
        raise MemoryBudgetError(f"dense {T.size}x{T.size} matrix exceeds the memory budget")
    diag = -shift if V.infinite else V.cell_average(grid) - shift
    H = T.shifted(diag, f"Hamiltonian({T.descriptor}, {V.label()})")
    return H


def _state_field(H: LinearOperator, vec: np.ndarray) -> Field:
    full = np.zeros(H.grid.n)
    full[H.lo:H.hi] = vec
    return normalize(Field(H.grid, full), "L2")


def lowest_eigenpairs(H, k: int = 1, rtol: float = 1e-8) -> SpectralSet:
    """The k smallest eigenpairs of a symmetric structured operator or matrix."""
    if isinstance(H, LinearOperator):
        if H.band <= 1:
            d, e = H.tridiagonal()
            w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
        else:
            w, v = eigh(H.dense(), subset_by_index=[0, k - 1], check_finite=False)
        scale = H.gershgorin()
        apply = H.apply_array
    else:
        M = np.asarray(H, dtype=np.float64)
        if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
            raise ValueError("matrix is not symmetric")
        w, v = eigh(M, subset_by_index=[0, k - 1])
        scale = float(np.abs(M).sum(axis=1).max())
        apply = lambda f: M @ f  # noqa: E731
    pairs = []
    worst = 0.0
    for i in range(w.size):
        vec = v[:, i]
        res = float(np.linalg.norm(apply(vec) - w[i] * vec) / np.linalg.norm(vec))
        worst = max(worst, res)
        if isinstance(H, LinearOperator):
            state = _state_field(H, vec)
        else:
            state = vec / np.linalg.norm(vec)
            if state[np.argmax(np.abs(state))] < 0:
                state = -state
        pairs.append(SpectralPair(i + 1, float(w[i]), state, res))
    if worst > rtol * max(scale, 1.0):
        raise EigenSolveError(f"eigen-residual {worst:.3g} above {rtol:g}*|H|", worst)
    return SpectralSet(pairs)


def rayleigh_quotient(H: LinearOperator, psi: Field) -> float:
    f = psi.values[H.lo:H.hi]
    return float(np.dot(f, H.apply_array(f)) / np.dot(f, f))


def imaginary_time_ground(T_kind: str, V: Potential, grid: Grid, dt: float, tol: float = 1e-11,
                          max_steps: int = 200_000, psi0: Field | None = None) -> SpectralPair:
    """Ground state by renormalized Strang relaxation; energy from the Rayleigh quotient."""
    if dt <= 0 or tol <= 0:
        raise ValueError("dt and tol must be positive")
    if psi0 is None:
        x = grid.x
        guess = np.where(np.abs(x) < 1, np.cos(np.pi * x / 2), 0.0)
        if not V.infinite:
            guess = guess + 1e-3 / (1 + x * x)
        psi0 = Field(grid, guess)
    trace = relax(psi0, T_kind, V, dt, max_steps=max_steps, tol=tol)
    if not trace.converged:
        raise ConvergenceError(f"imaginary-time relaxation did not converge in {max_steps} steps "
                               f"(last increment {trace.final_increment:.3g})", trace.final_increment)
    H = discretize_hamiltonian(T_kind, V, grid)
    psi = normalize(trace.final, "L2")
    return SpectralPair(1, rayleigh_quotient(H, psi), psi, None, trace.steps_taken)


def richardson(values, ppus, orders=(1, 2)) -> np.ndarray:
    """Eliminate error terms h^p for p in ``orders`` from a sequence of refinements.

    ``values`` has one row per resolution (h = 1/ppu); needs len(orders)+1 rows.
    """
    vals = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if vals.shape[0] == 1 and len(ppus) > 1:
        vals = vals.T
    hs = 1.0 / np.asarray(ppus, dtype=np.float64)
    if len(hs) != len(orders) + 1:
        raise ValueError("need one more resolution than eliminated orders")
    M = np.column_stack([np.ones_like(hs)] + [hs**p for p in orders])
    coef = np.linalg.solve(M, vals)
    return coef[0]


@dataclass(frozen=True)
class ExtrapolatedSpectrum:
    energies: np.ndarray
    raw: dict
    ppus: tuple


def cauchy_infinite_well_spectrum(k: int = 15, ppus=(200, 400, 800)) -> ExtrapolatedSpectrum:
    """Lowest k eigenvalues of the restricted Cauchy operator, extrapolated to h -> 0."""
    raw = {}
    for p in ppus:
        H = discretize_hamiltonian("cauchy", make_potential("infinite"), build_grid(1, p))
        raw[p] = lowest_eigenpairs(H, k).energies
    E = richardson([raw[p] for p in ppus], ppus, orders=tuple(range(1, len(ppus))))
    return ExtrapolatedSpectrum(E, raw, tuple(ppus))


@lru_cache(maxsize=16)
def ground_state(T_kind: str, V: Potential, grid: Grid) -> SpectralPair:
    """Dense/tridiagonal ground pair, cached per (driver, well, grid)."""
    H = discretize_hamiltonian(T_kind, V, grid)
    return lowest_eigenpairs(H, 1)[0]


def density_from_state(psi: Field) -> Field:
    return normalize(Field(psi.grid, psi.values**2), "L1")


def l2_norm(f: Field) -> float:
    return float(np.sqrt(trapezoid(f.values**2, f.grid.h)))

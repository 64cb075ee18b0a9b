"""Generators, well potentials and Schrödinger potentials on a uniform grid.

Every operator here has the form ``sign * (diag(D) - Toeplitz(w))`` acting on a
contiguous block of nodes, with zeros imposed outside the block. The Toeplitz
weights ``w[k]`` couple nodes ``k`` steps apart (``w[0] == 0``). Keeping that
structure explicit lets one object serve as a matrix-free operator (direct
loop or FFT) and, on request, as a dense symmetric matrix.

Conventions: the Cauchy operator is the positive ``(-Δ)^{1/2}``, the stable
generator is the negative ``-|Δ|^{μ/2}``, and the Laplacian is the negative
second difference ``Δ_h``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gamma as gamma_fn
from scipy.special import polygamma

from . import _loops
from .grid import Field, Grid, GridError

_NODE_TOL = 1e-9


class ExteriorConditionError(ValueError):
    def __init__(self, msg="exterior condition violated"):
        super().__init__(msg)


# -- potentials ---------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """Square well on (-1, 1): finite step of height V0 or hard walls."""

    kind: str
    V0: float = 0.0

    @property
    def infinite(self) -> bool:
        return self.kind == "infinite"

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.infinite:
            return np.where(np.abs(x) < 1 - _NODE_TOL, 0.0, np.inf)
        return np.where(np.abs(x) >= 1 - _NODE_TOL, self.V0, 0.0)

    def cell_average(self, grid: Grid) -> np.ndarray:
        """Node values with the step averaged over the cells that straddle +-1.

        The boundary nodes get V0/2. Used inside discrete Hamiltonians, where
        it lifts the eigenfunction error from first to second order in h.
        """
        if self.infinite:
            raise ValueError("an infinite well has no finite node values")
        ax = np.abs(grid.x)
        v = np.where(ax > 1 + _NODE_TOL, self.V0, 0.0)
        v[np.abs(ax - 1) <= _NODE_TOL] = 0.5 * self.V0
        return v

    def interior_mask(self, grid: Grid) -> np.ndarray:
        return grid.interior

    def label(self) -> str:
        return "infinite" if self.infinite else f"finite(V0={self.V0:g})"


def make_potential(kind: str, V0: float | None = None) -> Potential:
    kind = kind.lower()
    if kind in ("finite", "finitewell"):
        if V0 is None or not np.isfinite(V0) or V0 < 0:
            raise ValueError("finite well needs a depth V0 >= 0")
        return Potential("finite", float(V0))
    if kind in ("infinite", "infinitewell"):
        return Potential("infinite", np.inf)
    raise ValueError(f"unknown well kind {kind!r}")


def apply_multiplication(V: Potential, f: Field) -> Field:
    """Nodewise V*f; for hard walls the interior indicator is returned instead."""
    if V.infinite:
        return Field(f.grid, V.interior_mask(f.grid).astype(np.float64))
    return Field(f.grid, V(f.grid.x) * f.values)


# -- structured linear operators ---------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearOperator:
    """``sign * (diag(D) - Toeplitz(w))`` on nodes ``lo..hi-1`` of ``grid``.

    ``w`` is None for purely diagonal operators. ``band`` is the highest index
    with a nonzero weight, so a band of 1 means tridiagonal.
    """

    grid: Grid
    lo: int
    hi: int
    D: np.ndarray
    w: np.ndarray | None
    sign: float
    descriptor: str
    band: int
    exterior_zero: bool = False
    symmetric: bool = True

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def nodes(self) -> np.ndarray:
        mask = np.zeros(self.grid.n, dtype=bool)
        mask[self.lo:self.hi] = True
        return mask

    def apply_array(self, f: np.ndarray, method: str = "auto") -> np.ndarray:
        """Act on block-length values and return block-length values."""
        out = self.D * f
        if self.w is not None:
            out -= _toeplitz_apply(self.w, f, self.band, method)
        return self.sign * out

    def apply(self, f: Field, method: str = "auto") -> Field:
        if not f.grid.same_as(self.grid):
            raise GridError("operator and field live on different grids")
        v = f.values
        if self.exterior_zero:
            outside = np.ones(self.grid.n, dtype=bool)
            outside[self.lo:self.hi] = False
            if np.any(v[outside] != 0.0):
                raise ExteriorConditionError()
        out = np.zeros(self.grid.n)
        out[self.lo:self.hi] = self.apply_array(v[self.lo:self.hi], method)
        return Field(self.grid, out)

    __call__ = apply

    def dense(self) -> np.ndarray:
        m = self.size
        if self.w is None:
            mat = np.zeros((m, m))
        else:
            col = np.zeros(m)
            k = min(m, self.w.size)
            col[:k] = self.w[:k]
            mat = -toeplitz(col)
        mat[np.diag_indices(m)] += self.D
        return self.sign * mat

    def tridiagonal(self):
        """(diagonal, offdiagonal) when ``band <= 1``."""
        if self.band > 1:
            raise ValueError("operator is not tridiagonal")
        off = -self.w[1] if self.w is not None else 0.0
        return self.sign * self.D.copy(), self.sign * np.full(self.size - 1, off)

    def gershgorin(self) -> float:
        """Upper bound on the spectral radius."""
        off = 0.0
        if self.w is not None:
            ws = np.abs(self.w[: self.size])
            off = 2.0 * ws.sum()
        return float(np.max(np.abs(self.D)) + off)

    def shifted(self, diag_add, descriptor: str | None = None) -> "LinearOperator":
        """Operator plus a diagonal (in the operator's own sign convention)."""
        D = self.D + self.sign * np.broadcast_to(diag_add, self.D.shape)
        return LinearOperator(self.grid, self.lo, self.hi, D, self.w, self.sign,
                              descriptor or f"Composite({self.descriptor})", self.band,
                              self.exterior_zero)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        if (other.lo, other.hi) != (self.lo, self.hi) or not other.grid.same_as(self.grid):
            raise GridError("operators act on different node blocks")
        # Bring both into sign +1 form.
        D = self.sign * self.D + other.sign * other.D
        w = None
        if self.w is not None or other.w is not None:
            size = max(x.size for x in (self.w, other.w) if x is not None)
            w = np.zeros(size)
            for op in (self, other):
                if op.w is not None:
                    w[: op.w.size] += op.sign * op.w
        return LinearOperator(self.grid, self.lo, self.hi, D, w, 1.0,
                              f"Composite({self.descriptor}+{other.descriptor})",
                              max(self.band, other.band), self.exterior_zero or other.exterior_zero)


def _toeplitz_apply(w, f, band, method):
    n = f.size
    if band < 32:
        out = np.zeros(n)
        for k in range(1, min(band, n - 1) + 1):
            out[k:] += w[k] * f[:-k]
            out[:-k] += w[k] * f[k:]
        return out
    if method == "auto":
        method = "fft" if n > 256 else "direct"
    wn = w[:n] if w.size >= n else np.concatenate((w, np.zeros(n - w.size)))
    if method == "fft":
        return _loops.toeplitz_matvec_fft(wn, f)
    if method == "direct":
        return _loops.toeplitz_matvec_direct(np.ascontiguousarray(wn), np.ascontiguousarray(f))
    raise ValueError("method must be 'auto', 'fft' or 'direct'")


# -- kernel weights ----------------------------------------------------------

def stable_constant(mu: float) -> float:
    """Normalizing constant of the 1D symmetric mu-stable generator."""
    if not 0 < mu < 2:
        raise ValueError("stability index mu must lie in (0, 2)")
    return float(2**mu * gamma_fn((mu + 1) / 2) / (np.sqrt(np.pi) * abs(gamma_fn(-mu / 2))))


def _stable_weights(n: int, h: float, mu: float):
    """Off-diagonal weights and the singular-cell correction coefficient.

    The excluded cell |z| <= h/2 contributes C (h/2)^{2-mu}/(2-mu) f''(x),
    written with a central second difference; its coefficient per 1/h^2
    is returned as ``c``.
    """
    C = stable_constant(mu)
    k = np.arange(n, dtype=np.float64)
    w = np.zeros(n)
    w[1:] = C * h / (k[1:] * h) ** (1.0 + mu)
    c = C * (h / 2) ** (2.0 - mu) / (2.0 - mu) / h**2
    return C, w, c


def _rowsums(w: np.ndarray, m: int) -> np.ndarray:
    """sum_{j != i} w[|i-j|] over a block of m nodes."""
    S = np.cumsum(w[:m])
    i = np.arange(m)
    return S[i] + S[m - 1 - i]


def stable_operator(grid: Grid, mu: float) -> LinearOperator:
    """The positive operator |Δ|^{mu/2} on the whole grid, zero beyond +-a.

    The kernel mass outside the grid is added in closed form starting at the
    outer cell edges a + h/2, where the nodewise quadrature stops.
    """
    n, h, x = grid.n, grid.h, grid.x
    C, w, c = _stable_weights(n, h, mu)
    A = grid.a + h / 2
    tails = C * ((A - x) ** -mu + (A + x) ** -mu) / mu
    D = _rowsums(w, n) + tails + 2 * c
    w = w.copy()
    if n > 1:
        w[1] += c
    desc = "CauchyFree" if mu == 1 else f"StableFree({mu:g})"
    return LinearOperator(grid, 0, n, D, w, 1.0, desc, n - 1)


def cauchy_operator(grid: Grid) -> LinearOperator:
    return stable_operator(grid, 1.0)


def killing_intensity(x):
    """Continuum exterior-kernel mass (1/pi)(1/(1-x) + 1/(1+x)) for |x| < 1."""
    x = np.asarray(x, dtype=np.float64)
    return (1.0 / (1.0 - x) + 1.0 / (1.0 + x)) / np.pi


def lattice_killing_intensity(grid: Grid) -> np.ndarray:
    """Exterior kernel mass summed over every lattice node with |y| >= 1.

    Equals (1/(pi h)) [trigamma((1-x)/h) + trigamma((1+x)/h)] on the interior
    nodes and tends to ``killing_intensity`` as h -> 0.
    """
    xi = grid.x[grid.interior]
    kr = np.rint((1.0 - xi) / grid.h)
    kl = np.rint((1.0 + xi) / grid.h)
    return (polygamma(1, kr) + polygamma(1, kl)) / (np.pi * grid.h)


def cauchy_restricted_operator(grid: Grid) -> LinearOperator:
    """Cauchy operator killed outside (-1, 1), acting on the interior nodes.

    The exterior contribution uses the same lattice sum as the free operator
    so that a finite well with V0 -> infinity converges to this matrix.
    """
    mask = grid.interior
    idx = np.flatnonzero(mask)
    lo, hi = int(idx[0]), int(idx[-1]) + 1
    m = hi - lo
    h = grid.h
    _, w, c = _stable_weights(m, h, 1.0)
    D = _rowsums(w, m) + lattice_killing_intensity(grid) + 2 * c
    w = w.copy()
    if m > 1:
        w[1] += c
    return LinearOperator(grid, lo, hi, D, w, 1.0, "CauchyRestricted", m - 1, exterior_zero=True)


def laplacian_operator(grid: Grid, restricted: bool = False) -> LinearOperator:
    """Negative-semidefinite second difference, zero beyond the block ends."""
    if grid.n < 3:
        raise GridError("grid too small for a second difference")
    if restricted:
        idx = np.flatnonzero(grid.interior)
        lo, hi = int(idx[0]), int(idx[-1]) + 1
    else:
        lo, hi = 0, grid.n
    m = hi - lo
    h2 = grid.h**2
    w = np.zeros(2)
    w[1] = 1.0 / h2
    return LinearOperator(grid, lo, hi, np.full(m, 2.0 / h2), w, -1.0,
                          "Laplacian", 1, exterior_zero=restricted)


def multiplication_operator(grid: Grid, V: Potential) -> LinearOperator:
    return LinearOperator(grid, 0, grid.n, V.cell_average(grid), None, 1.0,
                          f"Multiplication({V.label()})", 0)


# -- functional entry points --------------------------------------------------

def apply_laplacian(f: Field) -> Field:
    return laplacian_operator(f.grid).apply(f)


def apply_stable_generator(f: Field, mu: float, method: str = "auto") -> Field:
    """-|Δ|^{mu/2} f with the exterior treated as f == 0."""
    op = stable_operator(f.grid, mu)
    return Field(f.grid, -op.apply(f, method).values)


def apply_cauchy(f: Field, method: str = "auto") -> Field:
    """(-Δ)^{1/2} f, the positive Cauchy operator."""
    return cauchy_operator(f.grid).apply(f, method)


def apply_cauchy_restricted(f: Field, method: str = "auto") -> Field:
    return cauchy_restricted_operator(f.grid).apply(f, method)


def cauchy_matrix(grid: Grid, restricted: bool = False) -> np.ndarray:
    op = cauchy_restricted_operator(grid) if restricted else cauchy_operator(grid)
    return op.dense()


def laplacian_matrix(grid: Grid, restricted: bool = False) -> np.ndarray:
    return laplacian_operator(grid, restricted).dense()


# -- compatibility potential --------------------------------------------------

class CompatibilityPotential(NamedTuple):
    field: Field
    mask: np.ndarray  # True where the value is valid


def compatibility_potential(rho_star: Field, form: str = "laplacian", floor: float = 1e-12,
                            nodes: np.ndarray | None = None) -> CompatibilityPotential:
    """Schrödinger potential whose zero-energy ground state is sqrt(rho_star).

    ``laplacian``: Δ sqrt(ρ) / sqrt(ρ).
    ``drift``: (b^2/2 + b')/2 with b = (log ρ)'.
    Nodes where ρ falls below ``floor * max ρ`` (and the two grid ends) are
    masked and hold 0 in the returned field.
    """
    rho = rho_star.values
    if nodes is not None and np.any(rho[np.asarray(nodes)] <= 0):
        raise ValueError("rho_star must be positive on the requested nodes")
    h = rho_star.grid.h
    ok = rho >= floor * rho.max()
    ok[0] = ok[-1] = False
    out = np.zeros_like(rho)
    if form == "laplacian":
        mask = ok
        s = np.sqrt(np.maximum(rho, 0.0))
        i = np.flatnonzero(mask)
        out[i] = (s[i - 1] - 2 * s[i] + s[i + 1]) / (h * h) / s[i]
    elif form == "drift":
        pos = rho >= floor * rho.max()
        mask = ok.copy()
        mask[1:-1] &= pos[:-2] & pos[2:]
        i = np.flatnonzero(mask)
        with np.errstate(divide="ignore"):
            lg = np.log(rho)
        b = (lg[i + 1] - lg[i - 1]) / (2 * h)
        db = (lg[i + 1] - 2 * lg[i] + lg[i - 1]) / (h * h)
        out[i] = 0.5 * (0.5 * b * b + db)
    else:
        raise ValueError("form must be 'laplacian' or 'drift'")
    return CompatibilityPotential(Field(rho_star.grid, out), mask)

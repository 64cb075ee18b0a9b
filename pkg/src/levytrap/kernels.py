"""Brownian hard-wall semigroup kernel on (-1, 1) and its probability-conserving transform."""
from __future__ import annotations

import io

import numpy as np

TAIL_TOL = 1e-14
DEFAULT_TERMS = 40


def terms_needed(t: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest N whose first omitted coefficient exp((1-(N+1)^2) pi^2 t/4) is below tail_tol."""
    if t <= 0:
        raise ValueError("t must be positive")
    need = np.sqrt(1.0 + 4.0 * np.log(1.0 / tail_tol) / (np.pi**2 * t))
    return max(1, int(np.floor(need)))


class KernelEvaluator:
    """Truncated eigen-series of the ground-energy-shifted Dirichlet heat kernel.

    The term count grows automatically when the requested one leaves a tail
    coefficient above ``tail_tol``.
    """

    def __init__(self, n_terms: int = DEFAULT_TERMS, tail_tol: float = TAIL_TOL):
        if n_terms < 1:
            raise ValueError("n_terms must be positive")
        self.n_terms = int(n_terms)
        self.tail_tol = tail_tol

    def terms_for(self, t: float) -> int:
        return max(self.n_terms, terms_needed(t, self.tail_tol))

    @staticmethod
    def _check_interval(*arrays):
        for a in arrays:
            if np.any(np.abs(a) > 1 + 1e-12):
                raise ValueError("kernel arguments must lie in [-1, 1]")

    def kernel(self, t, x, y):
        if t <= 0:
            raise ValueError("t must be positive")
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._check_interval(x, y)
        N = self.terms_for(t)
        n = np.arange(1, N + 1, dtype=np.float64)
        coef = np.exp((1.0 - n * n) * np.pi**2 * t / 4.0)
        xb, yb = np.broadcast_arrays(x, y)
        sx = np.sin(np.multiply.outer(xb + 1.0, n) * np.pi / 2)
        sy = np.sin(np.multiply.outer(yb + 1.0, n) * np.pi / 2)
        return (sx * sy) @ coef

    def kernel_matrix(self, t, x, y):
        """k(t, x_i, y_j) for all pairs."""
        if t <= 0:
            raise ValueError("t must be positive")
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._check_interval(x, y)
        N = self.terms_for(t)
        n = np.arange(1, N + 1, dtype=np.float64)
        coef = np.exp((1.0 - n * n) * np.pi**2 * t / 4.0)
        sx = np.sin(np.multiply.outer(x + 1.0, n) * np.pi / 2)
        sy = np.sin(np.multiply.outer(y + 1.0, n) * np.pi / 2)
        return (sx * coef) @ sy.T


def ground_amplitude(x):
    """cos(pi x / 2) on [-1, 1], the hard-wall ground state."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(x) <= 1, np.cos(np.pi * x / 2), 0.0)


_default = KernelEvaluator()


def well_kernel(t, x, y, n_terms: int | None = None):
    ev = _default if n_terms is None else KernelEvaluator(n_terms)
    return ev.kernel(t, x, y)


def transition_density(t, x, y, sqrt_rho_star=ground_amplitude, n_terms: int | None = None):
    """p(t, x, y) = k(t, x, y) s(x) / s(y): density at x after time t, started from y."""
    y = np.asarray(y, dtype=np.float64)
    sy = sqrt_rho_star(y)
    if np.any(np.abs(y) >= 1) or np.any(sy <= 0):
        raise ValueError("starting point must be interior")
    return well_kernel(t, x, y, n_terms) * sqrt_rho_star(x) / sy


def propagate(t, values, x, n_terms: int | None = None):
    """Apply k(t) as an integral operator to samples on nodes ``x`` spanning [-1, 1]."""
    ev = _default if n_terms is None else KernelEvaluator(n_terms)
    x = np.asarray(x, dtype=np.float64)
    h = x[1] - x[0]
    w = np.full(x.size, h)
    w[0] = w[-1] = h / 2
    return ev.kernel_matrix(t, x, x) @ (w * np.asarray(values))


def kernel_mesh_csv(t: float, m: int, which: str = "k", path=None) -> str:
    """k or p on an m x m mesh of [-1, 1] (p excludes the boundary columns)."""
    if m < 2:
        raise ValueError("mesh needs at least 2 points")
    x = np.linspace(-1.0, 1.0, m)
    if which == "k":
        vals = _default.kernel_matrix(t, x, x)
        X, Y = np.meshgrid(x, x, indexing="ij")
    elif which == "p":
        y = x[1:-1]
        vals = _default.kernel_matrix(t, x, y) * ground_amplitude(x)[:, None] / ground_amplitude(y)[None, :]
        X, Y = np.meshgrid(x, y, indexing="ij")
    else:
        raise ValueError("which must be 'k' or 'p'")
    buf = io.StringIO()
    buf.write("x,y,value\n")
    np.savetxt(buf, np.column_stack((X.ravel(), Y.ravel(), vals.ravel())), fmt="%.17g", delimiter=",")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    return text

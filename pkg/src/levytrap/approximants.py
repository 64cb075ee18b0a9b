"""Analytic approximations for the Cauchy operator killed outside (-1, 1).

* asymptotic eigenvalues n pi/2 - pi/8,
* Kwaśnicki's approximate eigenfunctions, built from a piecewise quadratic
  blend ``q`` and the Laplace transform ``G`` of a density ``gamma``,
* the closed-form ground state C sqrt((1 - x^2) cos(alpha x)).
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad, quad_vec
from scipy.interpolate import PchipInterpolator

from .grid import Field, GridError, trapezoid

ALPHA = 1443 * np.pi / 4096
C_NORM = 0.921749

# G is tabulated on u = sqrt(x), uniform in u, and interpolated monotonically.
G_TABLE_XMAX = 200.0
G_TABLE_POINTS = 1201


def approx_eigenvalue(n):
    """n pi/2 - pi/8, accurate for large n."""
    n = np.asarray(n)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    return n * np.pi / 2 - np.pi / 8


def alpha_series() -> float:
    """The same alpha written as (pi/2 - pi/8) minus a short series of powers of 1/2."""
    return (np.pi / 2 - np.pi / 8) - np.pi / 64 - np.pi / 256 - np.pi / 512 - np.pi / 1024 - np.pi / 4096


def q_aux(x):
    """Continuous nondecreasing blend: 0 below -1/3, 1 above 1/3, quadratic in between."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < -1 / 3, 0.0,
                    np.where(x < 0, 4.5 * (x + 1 / 3) ** 2,
                             np.where(x < 1 / 3, 1 - 4.5 * (x - 1 / 3) ** 2, 1.0)))


def _log_integral(s: float) -> float:
    """int_0^{pi/2} log(1 + s tan th) dth.

    For s > 1 the large-s growth is split off as (pi/2) log s so the remaining
    integrand stays O(1).
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        if s <= 1:
            return quad(lambda th: np.log1p(s * np.tan(th)), 0, np.pi / 2,
                        epsabs=0, epsrel=1e-11, limit=200)[0]
        rest = quad(lambda th: np.log(np.tan(th) + 1 / s), 0, np.pi / 2,
                    epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return 0.5 * np.pi * np.log(s) + rest


def _gamma_scalar(s: float) -> float:
    if s <= 0 or not np.isfinite(s):
        return 0.0
    return s / (1 + s * s) * np.exp(-_log_integral(s) / np.pi) / (np.pi * np.sqrt(2))


def gamma_density(s):
    """(1/(pi sqrt 2)) s/(1+s^2) exp(-(1/pi) int_0^inf log(1+rs)/(1+r^2) dr)."""
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    if s.ndim == 0:
        return _gamma_scalar(float(s))
    return np.array([_gamma_scalar(v) for v in s.ravel()]).reshape(s.shape)


def laplace_G_direct(x):
    """G(x) = int_0^inf exp(-x s) gamma(s) ds by adaptive vector quadrature.

    The substitution s = tan(phi)^2 maps the half-line onto (0, pi/2).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")

    def integrand(phi):
        t = np.tan(phi)
        s = t * t
        return np.exp(-x * s) * _gamma_scalar(s) * 2 * t / np.cos(phi) ** 2

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad_vec(integrand, 0, np.pi / 2, epsabs=1e-13, epsrel=1e-10)
    return val


@lru_cache(maxsize=1)
def _g_table():
    u = np.linspace(0.0, np.sqrt(G_TABLE_XMAX), G_TABLE_POINTS)
    return PchipInterpolator(u, laplace_G_direct(u * u))


def laplace_G(x, method: str = "table"):
    """Laplace transform of gamma; tabulated for x <= 200, direct beyond."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    if method == "direct":
        return laplace_G_direct(x).reshape(x.shape)
    if method != "table":
        raise ValueError("method must be 'table' or 'direct'")
    out = np.empty(x.shape)
    flat = x.ravel()
    res = out.ravel()
    small = flat <= G_TABLE_XMAX
    res[small] = _g_table()(np.sqrt(flat[small]))
    if np.any(~small):
        res[~small] = laplace_G_direct(flat[~small])
    return res.reshape(x.shape)


def kwasnicki_eigenfunction(n: int, x, method: str = "table"):
    """q(-x) F_n(1+x) - (-1)^n q(x) F_n(1-x), F_n(z) = sin(E_n z + pi/8) - G(E_n z).

    Evaluated on [-1, 1] and defined as 0 outside.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    E = approx_eigenvalue(n)
    xc = np.clip(x, -1.0, 1.0)

    def F(z):
        return np.sin(E * z + np.pi / 8) - laplace_G(E * z, method)

    val = q_aux(-xc) * F(1 + xc) - (-1) ** n * q_aux(xc) * F(1 - xc)
    return np.where(np.abs(x) <= 1, val, 0.0)


def semicircle_cosine_state(x, C: float = C_NORM, alpha: float = ALPHA):
    """C sqrt((1 - x^2) cos(alpha x)) on [-1, 1], 0 outside."""
    x = np.asarray(x, dtype=np.float64)
    inside = np.abs(x) <= 1
    rad = np.where(inside, (1 - x * x) * np.cos(alpha * x), 0.0)
    return C * np.sqrt(np.maximum(rad, 0.0))


def normalization_constant(alpha: float = ALPHA) -> float:
    """C making C^2 int_{-1}^{1} (1 - x^2) cos(alpha x) dx = 1."""
    integral = 2 * (2 * np.sin(alpha) / alpha**3 - 2 * np.cos(alpha) / alpha**2)
    return float(integral**-0.5)


def cosine_state(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(x) <= 1, np.cos(np.pi * x / 2), 0.0)


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    sup: float
    l2: float


class ComparisonReport:
    def __init__(self, rows):
        self.rows = list(rows)

    def __getitem__(self, name) -> ComparisonRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def best(self, metric: str = "sup") -> str:
        return min(self.rows, key=lambda r: getattr(r, metric)).name

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("candidate,sup,L2\n")
        for r in self.rows:
            buf.write(f"{r.name},{r.sup:.17g},{r.l2:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="ascii") as fh:
                fh.write(text)
        return text


def default_candidates(method: str = "table") -> dict:
    return {
        "semicircle_cosine": semicircle_cosine_state,
        "kwasnicki_n1": lambda x: kwasnicki_eigenfunction(1, x, method),
        "cosine": cosine_state,
    }


def compare_ground_states(candidates: dict, reference: Field, region=None) -> ComparisonReport:
    """Sup and L2 distances of each candidate to ``reference``.

    Candidates are callables of x or Fields on the reference grid. ``region``
    is an optional boolean node mask; by default the whole grid is used.
    """
    x = reference.grid.x
    mask = np.ones(x.size, dtype=bool) if region is None else np.asarray(region)
    rows = []
    for name, cand in candidates.items():
        if isinstance(cand, Field):
            if not cand.grid.same_as(reference.grid):
                raise GridError(f"candidate {name!r} lives on a different grid")
            vals = cand.values
        else:
            vals = np.asarray(cand(x), dtype=np.float64)
        d = np.where(mask, vals - reference.values, 0.0)
        rows.append(ComparisonRow(name, float(np.abs(d).max()),
                                  float(np.sqrt(trapezoid(d * d, reference.grid.h)))))
    return ComparisonReport(rows)

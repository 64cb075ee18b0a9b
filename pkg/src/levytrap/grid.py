"""Uniform symmetric lattices on [-a, a], sampled fields and trapezoid quadrature."""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_POINTS = 10**6
NORM_MODES = ("L1", "L2", "none")


class GridError(ValueError):
    """Invalid grid request or grid mismatch between fields."""


class DegenerateFieldError(ValueError):
    """Raised when a field with zero norm is normalized."""

    def __init__(self, msg="degenerate field"):
        super().__init__(msg)


@dataclass(frozen=True)
class Grid:
    a: float
    ppu: int
    n: int
    h: float
    x: np.ndarray = field(repr=False, compare=False)

    def index_of(self, value: float) -> int:
        """Index of the node sitting exactly on ``value`` (must be a node)."""
        k = (value + self.a) * self.ppu
        i = int(round(k))
        if abs(k - i) > 1e-9 or not 0 <= i < self.n:
            raise GridError(f"{value} is not a node of this grid")
        return i

    @property
    def interior(self) -> np.ndarray:
        """Boolean mask of nodes strictly inside (-1, 1)."""
        i = self.index_of(1.0)
        mask = np.zeros(self.n, dtype=bool)
        mask[self.n - 1 - i + 1:i] = True
        return mask

    def same_as(self, other: "Grid") -> bool:
        return self.n == other.n and self.ppu == other.ppu and self.a == other.a

    def field(self, values, norm: str = "none") -> "Field":
        return Field(self, values, norm)


def build_grid(a: float, points_per_unit: int = 40, max_points: int = DEFAULT_MAX_POINTS) -> Grid:
    """Lattice with spacing 1/points_per_unit on [-a, a]; -1, 0 and 1 are always nodes."""
    if int(points_per_unit) != points_per_unit or points_per_unit < 2:
        raise GridError("points_per_unit must be an integer >= 2")
    ppu = int(points_per_unit)
    if not np.isfinite(a) or a < 1:
        raise GridError("cutoff a must be >= 1")
    half = a * ppu
    m = int(round(half))
    if abs(half - m) > 1e-9 * max(1.0, half):
        raise GridError(f"a*points_per_unit = {half} is not an integer; +-1 would not be nodes")
    n = 2 * m + 1
    if n > max_points:
        raise GridError(f"grid of {n} points exceeds the configured maximum {max_points}")
    x = np.arange(-m, m + 1, dtype=np.float64) / ppu
    x.setflags(write=False)
    return Grid(a=m / ppu, ppu=ppu, n=n, h=1.0 / ppu, x=x)


class Field:
    """Immutable samples of a real function on a Grid, tagged with a norm mode."""

    __slots__ = ("grid", "values", "norm")

    def __init__(self, grid: Grid, values, norm: str = "none"):
        if norm not in NORM_MODES:
            raise ValueError(f"norm must be one of {NORM_MODES}")
        v = np.array(values, dtype=np.float64)
        if v.shape != (grid.n,):
            raise GridError(f"expected {grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "norm", norm)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    def __repr__(self):
        return f"Field(n={self.grid.n}, a={self.grid.a}, norm={self.norm!r})"

    def with_values(self, values, norm: str = "none") -> "Field":
        return Field(self.grid, values, norm)

    def __call__(self, xq):
        """Linear interpolation of the samples (used for reporting only)."""
        return np.interp(xq, self.grid.x, self.values)

    # Serialization ---------------------------------------------------------
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# grid a={self.grid.a!r} h={self.grid.h!r} norm={self.norm}\n")
        buf.write("x,value\n")
        np.savetxt(buf, np.column_stack((self.grid.x, self.values)), fmt="%.17g", delimiter=",")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="ascii") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "Field":
        text = source if "\n" in str(source) else open(source, encoding="ascii").read()
        header = text.splitlines()[0]
        m = re.match(r"# grid a=(\S+) h=(\S+) norm=(\S+)", header)
        if not m:
            raise GridError("missing '# grid' header line")
        a, h, norm = float(m.group(1)), float(m.group(2)), m.group(3)
        grid = build_grid(a, int(round(1.0 / h)))
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=2, ndmin=2)
        return cls(grid, data[:, 1], norm)


def _check_same(f: Field, g: Field):
    if not f.grid.same_as(g.grid):
        raise GridError("fields live on different grids")


def trapezoid(values, h: float) -> float:
    v = np.asarray(values, dtype=np.float64)
    return float(h * (v.sum() - 0.5 * (v[0] + v[-1])))


def integrate(f: Field) -> float:
    """Composite trapezoid integral of ``f`` over [-a, a]."""
    return trapezoid(f.values, f.grid.h)


def inner(f: Field, g: Field) -> float:
    _check_same(f, g)
    return trapezoid(f.values * g.values, f.grid.h)


def norm_of(f: Field, mode: str = "L2") -> float:
    if mode == "L1":
        return trapezoid(np.abs(f.values), f.grid.h)
    if mode == "L2":
        return float(np.sqrt(trapezoid(f.values**2, f.grid.h)))
    raise ValueError("mode must be 'L1' or 'L2'")


def normalize(f: Field, mode: str = "L2") -> Field:
    """Rescale to unit L1 mass or unit L2 norm.

    For L2 the sign is fixed so the sample of largest magnitude is positive.
    L1 keeps the sign: its target is a probability density.
    """
    nrm = norm_of(f, mode)
    if not nrm > 0:
        raise DegenerateFieldError()
    v = f.values / nrm
    if mode == "L2" and v[np.argmax(np.abs(v))] < 0:
        v = -v
    return Field(f.grid, v, mode)


def distance(f: Field, g: Field, kind: str = "sup") -> float:
    _check_same(f, g)
    d = f.values - g.values
    if kind == "sup":
        return float(np.max(np.abs(d)))
    if kind == "L1":
        return trapezoid(np.abs(d), f.grid.h)
    if kind == "L2":
        return float(np.sqrt(trapezoid(d * d, f.grid.h)))
    raise ValueError("kind must be 'sup', 'L1' or 'L2'")


def truncated_gaussian(grid: Grid, mu: float = 0.0, sigma: float = 2.0, cutoff: float | None = None) -> Field:
    """Unit-mass normal density restricted to |x - mu| <= cutoff."""
    x = grid.x
    g = np.exp(-((x - mu) ** 2) / (2 * sigma**2)) / (sigma * np.sqrt(2 * np.pi))
    if cutoff is not None:
        g = np.where(np.abs(x - mu) <= cutoff + 1e-9 * grid.h, g, 0.0)
    return normalize(Field(grid, g), "L1")

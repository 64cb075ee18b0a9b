"""Brownian and Cauchy motion trapped in finite and infinite square wells."""
from ._accel import BACKEND
from .grid import Field, Grid, build_grid, integrate, inner, normalize

__version__ = "0.1.0"
__all__ = ["BACKEND", "Field", "Grid", "build_grid", "integrate", "inner", "normalize"]

"""Uniform cell-centred grids, zero-Neumann padding and the five-point Laplacian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GridSpec", "Field", "pad_neumann", "laplacian_5pt", "unit_square"]


@dataclass(frozen=True)
class GridSpec:
    """Rectangle ``(a, b) x (c, d)`` split into ``nx x ny`` square cells.

    Nodes sit at cell centres, ``x_i = a + (i - 1/2) h`` for ``i = 1..nx``.
    """

    a: float
    b: float
    c: float
    d: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need at least 3x3 nodes, got {self.nx}x{self.ny}")
        if not (self.b > self.a and self.d > self.c):
            raise ValueError("domain bounds must satisfy a < b and c < d")
        hx = (self.b - self.a) / self.nx
        hy = (self.d - self.c) / self.ny
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ValueError(f"mesh is not uniform: hx={hx!r}, hy={hy!r}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return self.a + (np.arange(1, self.nx + 1) - 0.5) * self.h

    @property
    def y(self) -> np.ndarray:
        return self.c + (np.arange(1, self.ny + 1) - 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(X, Y)`` with ``X[i, j] = x_i``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def area(self) -> float:
        return (self.b - self.a) * (self.d - self.c)


def unit_square(n: int = 100) -> GridSpec:
    return GridSpec(0.0, 1.0, 0.0, 1.0, n, n)


@dataclass(frozen=True, eq=False)
class Field:
    """Node values of a scalar on a grid; ``values[i, j]`` approximates phi(x_i, y_j).

    The stored array is a read-only float64 copy, so a Field can be shared freely.
    """

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if values.shape != self.spec.shape:
            raise ValueError(f"values have shape {values.shape}, grid is {self.spec.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def with_values(self, values) -> Field:
        return Field(self.spec, values)

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.values, other.values)

    __hash__ = None


def pad_neumann(f) -> np.ndarray:
    """Add a ghost ring that replicates the adjacent interior values.

    Corners copy the nearest interior corner; they never enter a five-point stencil.
    """
    return np.pad(np.asarray(f, dtype=np.float64), 1, mode="edge")


def _laplacian(u: np.ndarray, h: float) -> np.ndarray:
    p = np.pad(u, 1, mode="edge")
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * u) / (h * h)


def laplacian_5pt(f: Field) -> Field:
    """Discrete Laplacian of ``f`` under zero-Neumann boundary conditions."""
    return f.with_values(_laplacian(f.values, f.spec.h))

"""Benchmark initial fields on the unit square and the random training field."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import Field, GridSpec

__all__ = [
    "ShapeParams",
    "eps_m",
    "sierra",
    "star",
    "circle",
    "torus",
    "maze",
    "cells",
    "random_uniform",
    "SHAPES",
    "BENCHMARK_SHAPES",
    "make_shape",
]


@dataclass(frozen=True)
class ShapeParams:
    rho: float = 0.012  # interface thickness of the tanh profiles
    center: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")


DEFAULT_PARAMS = ShapeParams()


def eps_m(h: float, m: float) -> float:
    """Interface width spanning about ``m`` cells: ``h m / (2 sqrt(2) atanh(0.9))``."""
    if not h > 0:
        raise ValueError("h must be positive")
    if not m >= 1:
        raise ValueError("m must be >= 1")
    return h * m / (2.0 * math.sqrt(2.0) * math.atanh(0.9))


def _polar(spec: GridSpec, params: ShapeParams):
    X, Y = spec.mesh()
    dx, dy = X - params.center[0], Y - params.center[1]
    return dx, dy, np.hypot(dx, dy)


def _profile(signed: np.ndarray, rho: float) -> np.ndarray:
    return np.tanh(signed / (math.sqrt(2.0) * rho))


def sierra(spec: GridSpec, params: ShapeParams = DEFAULT_PARAMS) -> Field:
    X, Y = spec.mesh()
    return Field(spec, np.cos(2 * np.pi * X) * np.cos(2 * np.pi * Y))


def star(spec: GridSpec, params: ShapeParams = DEFAULT_PARAMS) -> Field:
    dx, dy, r = _polar(spec, params)
    # same angle as atan(dy/dx) on x > 0.5 and pi + atan(dy/dx) otherwise, up to 2*pi
    theta = np.arctan2(dy, dx)
    return Field(spec, _profile(0.25 + 0.1 * np.cos(6 * theta) - r, params.rho))


def circle(spec: GridSpec, params: ShapeParams = DEFAULT_PARAMS, radius: float = 0.25) -> Field:
    _, _, r = _polar(spec, params)
    return Field(spec, _profile(radius - r, params.rho))


def torus(spec: GridSpec, params: ShapeParams = DEFAULT_PARAMS, outer: float = 0.4, inner: float = 0.3) -> Field:
    _, _, r = _polar(spec, params)
    return Field(spec, -1.0 + _profile(outer - r, params.rho) - _profile(inner - r, params.rho))


def _spiral_mask(cells: int) -> np.ndarray:
    """Square spiral of unit-width corridors on a ``cells x cells`` board, walls one cell thick."""
    mask = np.zeros((cells, cells), dtype=bool)
    i, j = 0, 0
    mask[i, j] = True
    moves = [(0, 1), (1, 0), (0, -1), (-1, 0)]
    lengths = [cells - 1, cells - 1, cells - 1]
    n = cells - 3
    while n > 0:
        lengths += [n, n]
        n -= 2
    for turn, length in enumerate(lengths):
        di, dj = moves[turn % 4]
        for _ in range(length):
            i, j = i + di, j + dj
            mask[i, j] = True
    return mask


def maze(spec: GridSpec, params: ShapeParams = DEFAULT_PARAMS, corridor: int = 10) -> Field:
    """+1 on a spiral corridor ``corridor`` nodes wide, -1 elsewhere, tanh-smoothed at the walls."""
    cells = -(-max(spec.nx, spec.ny) // corridor)
    board = np.kron(_spiral_mask(cells), np.ones((corridor, corridor), dtype=bool))
    inside = board[: spec.nx, : spec.ny]
    # signed distance to the corridor edge, measured from node centres to the midpoint between nodes
    dist_in = ndimage.distance_transform_edt(inside) - 0.5
    dist_out = ndimage.distance_transform_edt(~inside) - 0.5
    signed = np.where(inside, dist_in, -dist_out) * spec.h
    return Field(spec, _profile(signed, params.rho))


CELL_CENTERS = ((0.3, 0.3), (0.7, 0.4), (0.45, 0.7))
CELL_RADII = (0.12, 0.10, 0.14)


def cells(spec: GridSpec, params: ShapeParams = DEFAULT_PARAMS) -> Field:
    """Pointwise maximum of three circle profiles."""
    blobs = [
        circle(spec, ShapeParams(params.rho, center), radius).values for center, radius in zip(CELL_CENTERS, CELL_RADII)
    ]
    return Field(spec, np.maximum.reduce(blobs))


def random_uniform(spec: GridSpec, seed: int) -> Field:
    """I.i.d. uniform[-1, 1] node values from a seeded PCG64 generator."""
    rng = np.random.default_rng(seed)
    return Field(spec, rng.uniform(-1.0, 1.0, spec.shape))


SHAPES = {
    "sierra": sierra,
    "star": star,
    "circle": circle,
    "torus": torus,
    "maze": maze,
    "cells": cells,
}
BENCHMARK_SHAPES = tuple(SHAPES)


def make_shape(name: str, spec: GridSpec, params: ShapeParams = DEFAULT_PARAMS) -> Field:
    try:
        fn = SHAPES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown shape {name!r}; choose from {', '.join(SHAPES)}") from None
    return fn(spec, params)

"""Error metrics, the discrete Allen-Cahn energy and the benchmark error table."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .fcnn import fcnn_rollout
from .fdm import (
    DT_LARGE,
    DT_SMALL,
    EquationKind,
    EquationParams,
    TimeStepping,
    Trajectory,
    fdm_rollout,
    is_blown_up,
    reference_solution,
    steps_for,
)
from .grid import Field, GridSpec, unit_square
from .initcond import BENCHMARK_SHAPES, make_shape
from .io import atomic_write_text

__all__ = [
    "relative_l2",
    "double_well",
    "discrete_energy",
    "normalized_energy_series",
    "minmax_series",
    "is_blown_up",
    "evaluation_time",
    "TableRow",
    "table1_harness",
    "table_to_csv",
    "series_to_csv",
]


def relative_l2(phi, phi_ref) -> float:
    phi = np.asarray(phi, dtype=np.float64)
    phi_ref = np.asarray(phi_ref, dtype=np.float64)
    if phi.shape != phi_ref.shape:
        raise ValueError(f"shape mismatch: {phi.shape} vs {phi_ref.shape}")
    ref_norm = np.linalg.norm(phi_ref)
    if ref_norm == 0:
        raise ValueError("reference field has zero norm")
    return float(np.linalg.norm(phi - phi_ref) / ref_norm)


def double_well(phi):
    return 0.25 * (phi * phi - 1.0) ** 2


def discrete_energy(phi: Field, eps: float) -> float:
    """``sum(F(phi)/eps^2) h^2 + 1/2 sum over interior edges of (phi_a - phi_b)^2``.

    The gradient term is ``|grad_h phi|^2 h^2`` per edge, so ``h`` cancels there.
    Boundary edges carry no difference under zero-Neumann conditions.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    u = phi.values
    h = phi.spec.h
    bulk = np.sum(double_well(u)) * h * h / (eps * eps)
    grad = 0.5 * (np.sum(np.diff(u, axis=0) ** 2) + np.sum(np.diff(u, axis=1) ** 2))
    return float(bulk + grad)


def normalized_energy_series(traj: Trajectory, eps: float) -> np.ndarray:
    energies = np.array([discrete_energy(f, eps) for f in traj.fields])
    return energies / energies[0]


def minmax_series(traj: Trajectory) -> np.ndarray:
    """``(min, max)`` per snapshot, shape ``(len(traj), 2)``."""
    with np.errstate(invalid="ignore"):
        return np.array([(np.min(f.values), np.max(f.values)) for f in traj.fields])


def evaluation_time(eq, shape: str) -> float:
    """Comparison time of the error table; Fisher/torus is read out early, at t = 0.003."""
    if EquationKind.parse(eq) is EquationKind.FISHER and shape == "torus":
        return 0.003
    return 0.006


@dataclass(frozen=True)
class TableRow:
    equation: str
    shape: str
    t: float
    fcnn_dtL_error: float
    fdm_dts_error: float
    fdm_dtL_status: str
    fdm_dtL_error: float = float("nan")


def _run_cell(eq, shape, model, spec, dt_s, dt_L, shape_time) -> TableRow:
    t = shape_time(eq.kind, shape)
    f0 = make_shape(shape, spec)
    ref = reference_solution(f0, eq, t, dt_s)

    small = fdm_rollout(f0, eq, TimeStepping(dt_s, steps_for(t, dt_s), record_every=10**9))
    fdm_err = float("inf") if small.blown_up else relative_l2(small.final, ref)

    n_large = steps_for(t, dt_L)
    large = fdm_rollout(f0, eq, TimeStepping(dt_L, n_large, record_every=10**9))
    if large.blown_up:
        status, large_err = f"blowup@{large.blowup_step}", float("inf")
    else:
        status, large_err = "finite", relative_l2(large.final, ref)

    fcnn_err = float("nan")
    if model is not None:
        pred = fcnn_rollout(model, f0, n_large, dt_L, record_every=10**9)
        fcnn_err = float("inf") if pred.blown_up else relative_l2(pred.final, ref)
    return TableRow(eq.kind.short, shape, t, fcnn_err, fdm_err, status, large_err)


def table1_harness(
    equations: Iterable = tuple(EquationKind),
    shapes: Iterable[str] = BENCHMARK_SHAPES,
    models: Mapping | None = None,
    spec: GridSpec | None = None,
    dt_s: float = DT_SMALL,
    dt_L: float = DT_LARGE,
    workers: int = 1,
    shape_time=evaluation_time,
) -> list[TableRow]:
    """Relative L2 errors of FCNN(dt_L), FDM(dt_s) and FDM(dt_L) against the dt_s/100 reference.

    ``models`` maps an equation kind to a trained network; missing entries give NaN.
    Rows come back in (equation, shape) order regardless of ``workers``.
    """
    spec = spec or unit_square(100)
    models = {EquationKind.parse(k): v for k, v in (models or {}).items()}
    cells = [(EquationParams.default(eq), s) for eq in equations for s in shapes]
    jobs = [(eq, s, models.get(eq.kind), spec, dt_s, dt_L, shape_time) for eq, s in cells]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda a: _run_cell(*a), jobs))
    return [_run_cell(*a) for a in jobs]


def table_to_csv(rows: list[TableRow], path=None) -> str:
    lines = ["equation,shape,t,fcnn_dtL_error,fdm_dts_error,fdm_dtL_status"]
    for r in rows:
        lines.append(f"{r.equation},{r.shape},{r.t:g},{r.fcnn_dtL_error:.6e},{r.fdm_dts_error:.6e},{r.fdm_dtL_status}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write_text(Path(path), text)
    return text


def series_to_csv(traj: Trajectory, eps: float, path=None) -> str:
    """time, normalized energy, min, max per snapshot."""
    energy = normalized_energy_series(traj, eps)
    mm = minmax_series(traj)
    lines = ["step,time,energy,min,max"]
    for n, t, e, (lo, hi) in zip(traj.steps, traj.times, energy, mm):
        lines.append(f"{n},{t:.17g},{e:.17g},{lo:.17g},{hi:.17g}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write_text(Path(path), text)
    return text

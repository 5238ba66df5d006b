"""Explicit Euler finite-difference solvers for heat, Fisher and Allen-Cahn.

All three equations share the form ``phi_t = alpha * lap(phi) + R(phi)`` with
``R = 0``, ``beta (phi - phi^2)`` or ``beta (phi - phi^3)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .grid import Field, _laplacian
from .io import atomic_write_text, save_field, save_pgm

__all__ = [
    "EquationKind",
    "EquationParams",
    "TimeStepping",
    "Trajectory",
    "BlowUpError",
    "BLOWUP_BOUND",
    "DT_SMALL",
    "DT_LARGE",
    "REFERENCE_REFINEMENT",
    "stability_threshold",
    "reaction",
    "fdm_step",
    "is_blown_up",
    "rollout",
    "fdm_rollout",
    "steps_for",
    "reference_solution",
    "export_trajectory",
]

BLOWUP_BOUND = 1e6
DT_SMALL = 2e-5
DT_LARGE = 6e-5
REFERENCE_REFINEMENT = 100


class EquationKind(str, enum.Enum):
    HEAT = "heat"
    FISHER = "fisher"
    ALLEN_CAHN = "allen_cahn"

    @property
    def short(self) -> str:
        return {"heat": "HE", "fisher": "FE", "allen_cahn": "AC"}[self.value]

    @classmethod
    def parse(cls, name) -> EquationKind:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"he": "heat", "fe": "fisher", "ac": "allen_cahn", "allencahn": "allen_cahn"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class EquationParams:
    kind: EquationKind
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", EquationKind.parse(self.kind))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.kind is EquationKind.HEAT and self.beta != 0:
            raise ValueError("the heat equation has no reaction term (beta must be 0)")

    @classmethod
    def default(cls, kind) -> EquationParams:
        """Coefficients used for the benchmark runs: (1, 0), (1, 100), (1, 6944)."""
        kind = EquationKind.parse(kind)
        beta = {EquationKind.HEAT: 0.0, EquationKind.FISHER: 100.0, EquationKind.ALLEN_CAHN: 6944.0}
        return cls(kind, 1.0, beta[kind])


@dataclass(frozen=True)
class TimeStepping:
    dt: float
    n_steps: int
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


class BlowUpError(RuntimeError):
    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"solution blew up at step {step}")


@dataclass
class Trajectory:
    """Recorded snapshots of a rollout.

    If the run blew up, the last snapshot is the offending field and
    ``blowup_step`` is the step that produced it.
    """

    fields: list[Field]
    steps: list[int]
    dt: float
    blowup_step: int | None = None
    t0: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def blown_up(self) -> bool:
        return self.blowup_step is not None

    @property
    def times(self) -> list[float]:
        return [self.t0 + n * self.dt for n in self.steps]

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def __len__(self):
        return len(self.fields)


def stability_threshold(h: float, alpha: float) -> float:
    """Largest stable explicit step for the heat stencil, ``h^2 / (4 alpha)``."""
    if not (h > 0 and alpha > 0):
        raise ValueError(f"h and alpha must be positive, got h={h}, alpha={alpha}")
    return h * h / (4.0 * alpha)


def reaction(kind, beta: float, phi):
    kind = EquationKind.parse(kind)
    if kind is EquationKind.HEAT:
        return np.zeros_like(phi, dtype=np.float64) if np.ndim(phi) else 0.0
    if kind is EquationKind.FISHER:
        return beta * (phi - phi * phi)
    return beta * (phi - phi * phi * phi)


def _step(u: np.ndarray, h: float, eq: EquationParams, dt: float) -> np.ndarray:
    rhs = eq.alpha * _laplacian(u, h)
    if eq.kind is not EquationKind.HEAT:
        rhs += reaction(eq.kind, eq.beta, u)
    return u + dt * rhs


def fdm_step(f: Field, eq: EquationParams, dt: float) -> Field:
    return f.with_values(_step(f.values, f.spec.h, eq, dt))


def is_blown_up(values, bound: float = BLOWUP_BOUND) -> bool:
    values = np.asarray(values)
    with np.errstate(invalid="ignore"):
        return not np.isfinite(values).all() or bool(np.abs(values).max() > bound)


def rollout(
    step: Callable[[np.ndarray], np.ndarray],
    f0: Field,
    n_steps: int,
    dt: float,
    record_every: int = 1,
    bound: float = BLOWUP_BOUND,
) -> Trajectory:
    """Iterate an array map from ``f0``, recording every ``record_every`` steps and the last.

    Stops at the first step whose output is non-finite or exceeds ``bound``.
    """
    u = f0.values
    traj = Trajectory([f0], [0], dt)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            u = step(u)
            if is_blown_up(u, bound):
                traj.fields.append(f0.with_values(u))
                traj.steps.append(n)
                traj.blowup_step = n
                break
            if n % record_every == 0 or n == n_steps:
                traj.fields.append(f0.with_values(u))
                traj.steps.append(n)
    return traj


def fdm_rollout(f0: Field, eq: EquationParams, stepping: TimeStepping, bound: float = BLOWUP_BOUND) -> Trajectory:
    h = f0.spec.h
    traj = rollout(lambda u: _step(u, h, eq, stepping.dt), f0, stepping.n_steps, stepping.dt, stepping.record_every, bound)
    traj.meta.update(method="fdm", equation=eq.kind.value)
    return traj


def steps_for(t_final: float, dt: float, rtol: float = 1e-9) -> int:
    """Number of steps of size ``dt`` that land on ``t_final``; raises if it is not a multiple."""
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    n = round(t_final / dt)
    if not math.isclose(n * dt, t_final, rel_tol=rtol, abs_tol=rtol * dt):
        raise ValueError(f"t_final={t_final} is not a multiple of dt={dt}")
    return n


def reference_solution(f0: Field, eq: EquationParams, t_final: float, dt_s: float = DT_SMALL) -> Field:
    """Fine-step explicit solution with ``dt = dt_s / 100``."""
    dt = dt_s / REFERENCE_REFINEMENT
    n = steps_for(t_final, dt)
    h = f0.spec.h
    u = f0.values
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n + 1):
            u = _step(u, h, eq, dt)
            # checking every step would double the cost of a 30000-step run
            if k % 100 == 0 or k == n:
                if is_blown_up(u):
                    raise BlowUpError(k, f"reference solution blew up by step {k}")
    return f0.with_values(u)


def export_trajectory(traj: Trajectory, directory, pgm: bool = False, fixed_range: bool = False) -> Path:
    """Write ``step_<n>.fsn`` per snapshot plus ``index.csv`` (step,time,max,min,blown_up)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = ["step,time,max,min,blown_up"]
    for f, n, t in zip(traj.fields, traj.steps, traj.times):
        save_field(directory / f"step_{n}.fsn", f)
        if pgm:
            save_pgm(directory / f"step_{n}.pgm", f, fixed_range)
        with np.errstate(invalid="ignore"):
            vmax, vmin = np.max(f.values), np.min(f.values)
        flag = int(traj.blowup_step == n)
        rows.append(f"{n},{t:.17g},{vmax:.17g},{vmin:.17g},{flag}")
    atomic_write_text(directory / "index.csv", "\n".join(rows) + "\n")
    return directory

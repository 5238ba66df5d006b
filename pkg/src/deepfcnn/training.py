"""Fitting a deep stencil network to one pair of snapshots ``(phi_0, phi_k)``.

The loss is the plain sum of squared differences between the network output
on ``phi_0`` and ``phi_k``; parameters are updated with Adam until the loss
drops to ``epsilon`` or ``max_iters`` updates have been taken.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .fcnn import DEFAULT_DEPTH, POLY_ORDER, DeepFcnn, StencilLayer, backward, fdm_model, forward
from .fdm import DT_SMALL, REFERENCE_REFINEMENT, EquationParams, TimeStepping, fdm_rollout, stability_threshold
from .grid import Field, GridSpec
from .initcond import random_uniform
from .io import atomic_write_text

__all__ = [
    "TrainConfig",
    "TrainingPair",
    "TrainResult",
    "TrainingDivergedError",
    "Adam",
    "make_training_pair",
    "mse_loss",
    "init_model",
    "train",
    "write_train_log",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    k: int = 3
    dt_s: float = DT_SMALL
    epsilon: float = 1e-8
    max_iters: int = 200_000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    depth: int = DEFAULT_DEPTH
    init: str = "uniform"  # or "fdm"
    init_scale: float = 0.1
    fine_snapshots: bool = False  # generate phi_k with dt_s/100 steps instead of dt_s

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.dt_s > 0:
            raise ValueError("dt_s must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.init not in ("uniform", "fdm"):
            raise ValueError(f"unknown init mode {self.init!r}")

    @property
    def dt_L(self) -> float:
        return self.k * self.dt_s

    def check_steps(self, h: float, alpha: float) -> None:
        """Require ``dt_s <= h^2/(4 alpha) <= dt_L``."""
        limit = stability_threshold(h, alpha)
        if not self.dt_s <= limit <= self.dt_L:
            raise ValueError(
                f"need dt_s <= {limit:g} <= dt_L, got dt_s={self.dt_s:g}, dt_L={self.dt_L:g}"
            )


@dataclass(frozen=True)
class TrainingPair:
    phi0: Field
    phik: Field
    eq: EquationParams
    k: int
    dt_s: float

    def __post_init__(self):
        if self.phi0.spec != self.phik.spec:
            raise ValueError("snapshots live on different grids")
        if not self.phik.is_finite:
            raise ValueError("target snapshot is not finite")

    @property
    def dt_L(self) -> float:
        return self.k * self.dt_s


def make_training_pair(eq: EquationParams, spec: GridSpec, cfg: TrainConfig, seed: int | None = None) -> TrainingPair:
    """Uniform[-1, 1] noise and its state after ``k`` explicit steps of ``dt_s``."""
    cfg.check_steps(spec.h, eq.alpha)
    phi0 = random_uniform(spec, cfg.seed if seed is None else seed)
    if cfg.fine_snapshots:
        stepping = TimeStepping(cfg.dt_s / REFERENCE_REFINEMENT, cfg.k * REFERENCE_REFINEMENT)
    else:
        stepping = TimeStepping(cfg.dt_s, cfg.k)
    traj = fdm_rollout(phi0, eq, replace(stepping, record_every=max(stepping.n_steps, 1)))
    if traj.blown_up:
        raise RuntimeError(f"training snapshot blew up at step {traj.blowup_step}")
    return TrainingPair(phi0, traj.final, eq, cfg.k, cfg.dt_s)


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """``sum((pred - target)^2)`` and its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.sum(diff * diff)), 2.0 * diff


class Adam:
    """Adam update rule on a flat parameter vector."""

    def __init__(self, n: int, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def init_model(eq: EquationParams, cfg: TrainConfig, h: float | None = None, order: int | None = None) -> DeepFcnn:
    """Fresh model for ``eq``: small uniform weights, or stacked FDM layers (``init="fdm"``)."""
    order = POLY_ORDER[eq.kind] if order is None else order
    if cfg.init == "fdm":
        if h is None:
            raise ValueError("fdm initialisation needs the mesh size h")
        return fdm_model(eq, cfg.dt_L / cfg.depth, h, cfg.depth, order)
    rng = np.random.default_rng(cfg.seed)
    s = cfg.init_scale
    layers = [StencilLayer(rng.uniform(-s, s, 5), rng.uniform(-s, s, order + 1)) for _ in range(cfg.depth)]
    return DeepFcnn(layers, eq.kind)


class TrainingDivergedError(RuntimeError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"loss became non-finite at iteration {iteration}")


@dataclass
class TrainResult:
    model: DeepFcnn
    losses: list[float]
    converged: bool
    wall_times: list[float] = field(default_factory=list, repr=False)

    @property
    def updates(self) -> int:
        return len(self.losses) - 1

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def _total_loss(model, pairs):
    total, caches, grads = 0.0, [], []
    for pair in pairs:
        out, cache = forward(model, pair.phi0.values)
        loss, g = mse_loss(out, pair.phik.values)
        total += loss
        caches.append(cache)
        grads.append(g)
    return total, caches, grads


def train(model: DeepFcnn, pairs: TrainingPair | Sequence[TrainingPair], cfg: TrainConfig, log_every: int = 0) -> TrainResult:
    """Minimise the snapshot loss with Adam; the input model is left untouched.

    ``losses[i]`` is the loss before update ``i``; the last entry is the loss of
    the returned model, so ``len(losses) == updates + 1``.
    """
    if isinstance(pairs, TrainingPair):
        pairs = [pairs]
    expected = POLY_ORDER[pairs[0].eq.kind]
    if model.order != expected:
        raise ValueError(f"{pairs[0].eq.kind.value} models use polynomial order {expected}, got {model.order}")

    theta = model.parameters()
    opt = Adam(theta.size, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    losses, walls = [], []
    start = time.perf_counter()
    converged = False
    for it in range(cfg.max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            loss, caches, grads = _total_loss(model, pairs)
        if not np.isfinite(loss):
            raise TrainingDivergedError(it)
        losses.append(loss)
        walls.append(time.perf_counter() - start)
        if loss <= cfg.epsilon:
            converged = True
            break
        if it == cfg.max_iters:
            break
        grad = np.zeros_like(theta)
        for cache, g in zip(caches, grads):
            grad += backward(model, cache, g)[0]
        theta = opt.step(theta, grad)
        model = model.with_parameters(theta)
        if log_every and it % log_every == 0:
            log.info("iter %d loss %.3e", it, loss)
    return TrainResult(model, losses, converged, walls)


def write_train_log(path, result: TrainResult) -> Path:
    lines = ["iteration,loss,wall_time"]
    lines += [f"{i},{loss:.17g},{t:.6f}" for i, (loss, t) in enumerate(zip(result.losses, result.wall_times))]
    return atomic_write_text(path, "\n".join(lines) + "\n")

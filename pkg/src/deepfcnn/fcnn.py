"""Deep five-point stencil networks.

Each layer maps ``u -> w_c u + w_n u_N + w_s u_S + w_e u_E + w_w u_W + p(u)`` where
the neighbours come from replicate (zero-Neumann) padding and ``p`` is a
polynomial applied elementwise. Neighbour directions: east/west step along the
first array axis (x), north/south along the second (y).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fdm import EquationKind, EquationParams, Trajectory, rollout
from .grid import Field
from .io import atomic_write_bytes

__all__ = [
    "StencilLayer",
    "DeepFcnn",
    "ModelFormatError",
    "POLY_ORDER",
    "DEFAULT_DEPTH",
    "layer_forward",
    "forward",
    "backward",
    "predict",
    "fcnn_rollout",
    "fdm_layer",
    "fdm_model",
    "receptive_field",
    "model_to_bytes",
    "model_from_bytes",
    "save_model",
    "load_model",
]

POLY_ORDER = {EquationKind.HEAT: 0, EquationKind.FISHER: 2, EquationKind.ALLEN_CAHN: 3}
DEFAULT_DEPTH = 3


@dataclass
class StencilLayer:
    weights: np.ndarray  # (center, north, south, east, west)
    poly: np.ndarray  # a_0 .. a_r

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        self.poly = np.array(self.poly, dtype=np.float64).reshape(-1)
        if self.weights.shape != (5,):
            raise ValueError(f"a stencil layer has exactly 5 weights, got {self.weights.size}")
        if self.poly.size < 1:
            raise ValueError("polynomial needs at least the constant coefficient")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.poly).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def order(self) -> int:
        return self.poly.size - 1

    @classmethod
    def identity(cls, order: int = 0) -> StencilLayer:
        return cls([1.0, 0, 0, 0, 0], np.zeros(order + 1))


@dataclass
class DeepFcnn:
    layers: list[StencilLayer]
    eq_kind: EquationKind = EquationKind.HEAT
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.eq_kind = EquationKind.parse(self.eq_kind)
        if len(self.layers) < 1:
            raise ValueError("a model needs at least one layer")
        orders = {layer.order for layer in self.layers}
        if len(orders) != 1:
            raise ValueError(f"all layers must share one polynomial order, got {sorted(orders)}")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def order(self) -> int:
        return self.layers[0].order

    @property
    def n_params(self) -> int:
        return self.depth * (6 + self.order)

    def parameters(self) -> np.ndarray:
        """Flat parameter vector, per layer ``[w_c, w_n, w_s, w_e, w_w, a_0, ..., a_r]``."""
        return np.concatenate([np.concatenate([l.weights, l.poly]) for l in self.layers])

    def with_parameters(self, theta) -> DeepFcnn:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {theta.shape}")
        per = 6 + self.order
        layers = [StencilLayer(theta[m * per : m * per + 5], theta[m * per + 5 : (m + 1) * per]) for m in range(self.depth)]
        return DeepFcnn(layers, self.eq_kind, dict(self.meta))

    def __eq__(self, other):
        if not isinstance(other, DeepFcnn):
            return NotImplemented
        return (
            self.eq_kind == other.eq_kind
            and self.depth == other.depth
            and self.order == other.order
            and np.array_equal(self.parameters(), other.parameters())
        )


def _neighbours(u: np.ndarray):
    p = np.pad(u, 1, mode="edge")
    return p[1:-1, 2:], p[1:-1, :-2], p[2:, 1:-1], p[:-2, 1:-1]


def _polyval(coeffs: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.full_like(u, coeffs[-1])
    for a in coeffs[-2::-1]:
        out = out * u + a
    return out


def _layer(layer: StencilLayer, u: np.ndarray) -> np.ndarray:
    wc, wn, ws, we, ww = layer.weights
    north, south, east, west = _neighbours(u)
    return wc * u + wn * north + ws * south + we * east + ww * west + _polyval(layer.poly, u)


def layer_forward(layer: StencilLayer, f):
    """Apply one stencil layer; returns a Field when given one, else an array."""
    if isinstance(f, Field):
        return f.with_values(_layer(layer, f.values))
    return _layer(layer, np.asarray(f, dtype=np.float64))


def forward(model: DeepFcnn, f) -> tuple[np.ndarray, list[np.ndarray]]:
    """Run all layers. Returns the output and the cached layer inputs ``[u, h1, ..., h_{M-1}]``."""
    u = np.asarray(f, dtype=np.float64)
    cache = []
    for layer in model.layers:
        cache.append(u)
        u = _layer(layer, u)
    return u, cache


def _fold_ghosts(dp: np.ndarray) -> np.ndarray:
    # adjoint of replicate padding: ghost cells hand their gradient to the interior node they copied
    du = dp[1:-1, 1:-1].copy()
    du[0, :] += dp[0, 1:-1]
    du[-1, :] += dp[-1, 1:-1]
    du[:, 0] += dp[1:-1, 0]
    du[:, -1] += dp[1:-1, -1]
    return du


def backward(model: DeepFcnn, cache: list[np.ndarray], grad_output) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of a scalar loss given ``dL/d(output)``.

    Returns ``(grad_params, grad_input)`` with ``grad_params`` laid out like
    :meth:`DeepFcnn.parameters`.
    """
    g = np.asarray(grad_output, dtype=np.float64)
    if len(cache) != model.depth:
        raise ValueError("cache does not match the model depth; rerun forward")
    if g.shape != cache[-1].shape:
        raise ValueError(f"grad_output shape {g.shape} does not match field shape {cache[-1].shape}")
    per = 6 + model.order
    grads = np.zeros(model.n_params)
    for m in range(model.depth - 1, -1, -1):
        layer, u = model.layers[m], cache[m]
        north, south, east, west = _neighbours(u)
        block = grads[m * per : (m + 1) * per]
        block[:5] = [np.sum(g * u), np.sum(g * north), np.sum(g * south), np.sum(g * east), np.sum(g * west)]
        power = np.ones_like(u)
        for k in range(layer.order + 1):
            block[5 + k] = np.sum(g * power)
            power = power * u

        wc, wn, ws, we, ww = layer.weights
        dp = np.zeros((u.shape[0] + 2, u.shape[1] + 2))
        dp[1:-1, 2:] += wn * g
        dp[1:-1, :-2] += ws * g
        dp[2:, 1:-1] += we * g
        dp[:-2, 1:-1] += ww * g
        du = _fold_ghosts(dp) + wc * g
        if layer.order >= 1:
            dpoly = layer.poly[1:] * np.arange(1, layer.order + 1)
            du += g * _polyval(dpoly, u)
        g = du
    return grads, g


def predict(model: DeepFcnn, f: Field) -> Field:
    return f.with_values(forward(model, f.values)[0])


def fcnn_rollout(model: DeepFcnn, f0: Field, n_steps: int, dt: float, record_every: int = 1) -> Trajectory:
    """Advance ``f0`` by repeated model application; ``dt`` is the time one application covers."""
    traj = rollout(lambda u: forward(model, u)[0], f0, n_steps, dt, record_every)
    traj.meta.update(method="fcnn", equation=model.eq_kind.value)
    return traj


def fdm_layer(eq: EquationParams, dt: float, h: float, order: int | None = None) -> StencilLayer:
    """Layer that reproduces one explicit FDM step of ``eq`` exactly."""
    c = eq.alpha * dt / (h * h)
    need = POLY_ORDER[eq.kind]
    order = need if order is None else order
    if order < need:
        raise ValueError(f"{eq.kind.value} needs polynomial order >= {need}")
    poly = np.zeros(order + 1)
    if eq.kind is EquationKind.FISHER:
        poly[1], poly[2] = dt * eq.beta, -dt * eq.beta
    elif eq.kind is EquationKind.ALLEN_CAHN:
        poly[1], poly[3] = dt * eq.beta, -dt * eq.beta
    return StencilLayer([1.0 - 4.0 * c, c, c, c, c], poly)


def fdm_model(eq: EquationParams, dt: float, h: float, depth: int = DEFAULT_DEPTH, order: int | None = None) -> DeepFcnn:
    return DeepFcnn([fdm_layer(eq, dt, h, order) for _ in range(depth)], eq.kind)


def receptive_field(depth: int) -> int:
    """Edge length of the square input window seen by one output node."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return 2 * depth + 1


# --- FCN1 model files ---------------------------------------------------------

FCN_MAGIC = b"FCN1"
FCN_VERSION = 1
_FCN_HEADER = struct.Struct("<4sIIIB")
_KIND_CODES = {EquationKind.HEAT: 0, EquationKind.FISHER: 1, EquationKind.ALLEN_CAHN: 2}


class ModelFormatError(ValueError):
    pass


def model_to_bytes(model: DeepFcnn) -> bytes:
    header = _FCN_HEADER.pack(FCN_MAGIC, FCN_VERSION, model.depth, model.order, _KIND_CODES[model.eq_kind])
    return header + model.parameters().astype("<f8").tobytes()


def model_from_bytes(data: bytes) -> DeepFcnn:
    if len(data) < _FCN_HEADER.size:
        raise ModelFormatError("truncated FCN1 header")
    magic, version, depth, order, kind = _FCN_HEADER.unpack_from(data)
    if magic != FCN_MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != FCN_VERSION:
        raise ModelFormatError(f"unsupported FCN1 version {version}")
    if depth < 1:
        raise ModelFormatError("model file declares zero layers")
    kinds = {v: k for k, v in _KIND_CODES.items()}
    if kind not in kinds:
        raise ModelFormatError(f"unknown equation code {kind}")
    n = depth * (6 + order)
    expected = _FCN_HEADER.size + 8 * n
    if len(data) != expected:
        raise ModelFormatError(f"expected {expected} bytes, got {len(data)}")
    theta = np.frombuffer(data, dtype="<f8", offset=_FCN_HEADER.size)
    template = DeepFcnn([StencilLayer.identity(order)] * depth, kinds[kind])
    try:
        return template.with_parameters(theta)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def save_model(path, model: DeepFcnn) -> Path:
    return atomic_write_bytes(path, model_to_bytes(model))


def load_model(path) -> DeepFcnn:
    return model_from_bytes(Path(path).read_bytes())

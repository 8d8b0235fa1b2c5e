"""Dense tanh/sigmoid networks with exact input derivatives.

The derivative engine pushes a stack of "channels" through the network: the
value, the Jacobian column for every input coordinate, and the pure second
derivative for every spatial coordinate. A linear layer acts on every channel
with the same matrix (only the value channel receives the bias); an activation
mixes them through the chain rule

    J_a = s1 * J_z,       H_a = s2 * J_z**2 + s1 * H_z,

where s1, s2 are the first two derivatives of the activation at the value
channel. Parameter gradients are obtained by a hand-written reverse sweep over
the same computation, which is why the third derivative of the activation is
also needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidArchitectureError, InvalidInputError, NumericalFailureError

ACTIVATIONS = ("tanh", "sigmoid")
_CHUNK = 512
_KIND = {"tanh": _kernels.TANH, "sigmoid": _kernels.SIGMOID}


def activation_derivs(kind: str, z: np.ndarray, order: int = 2):
    """Return (s, s', s'', [s''']) of the activation evaluated at ``z``."""
    if kind == "tanh":
        s = np.tanh(z)
        s1 = 1.0 - s * s
        s2 = -2.0 * s * s1
        if order < 3:
            return s, s1, s2
        s3 = -2.0 * s1 * s1 - 2.0 * s * s2
        return s, s1, s2, s3
    if kind == "sigmoid":
        s = 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free logistic
        s1 = s * (1.0 - s)
        s2 = s1 * (1.0 - 2.0 * s)
        if order < 3:
            return s, s1, s2
        s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1
        return s, s1, s2, s3
    raise InvalidArchitectureError(f"unknown activation {kind!r}")


@dataclass
class MlpParams:
    """Weights (out x in) and biases (out,) of a fully connected network.

    ``periods`` switches on a periodic input embedding: each spatial
    coordinate x_i is replaced by (sin(2 pi x_i / L_i), cos(2 pi x_i / L_i));
    any remaining coordinate (time) is passed through unchanged.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"
    periods: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.biases):
            raise InvalidArchitectureError("need at least one layer and one bias per layer")
        if self.activation not in ACTIVATIONS:
            raise InvalidArchitectureError(f"unknown activation {self.activation!r}")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64).reshape(-1) for b in self.biases]
        prev = self.weights[0].shape[1] if self.weights[0].ndim == 2 else -1
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or w.shape[1] != prev or b.shape != (w.shape[0],):
                raise InvalidArchitectureError("layer dimensions do not chain")
            prev = w.shape[0]
        if prev != 1:
            raise InvalidArchitectureError("output layer must have width 1")
        if self.periods is not None:
            self.periods = tuple(float(p) for p in self.periods)
            if 2 * len(self.periods) > self.weights[0].shape[1]:
                raise InvalidArchitectureError("first layer too narrow for the periodic embedding")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def input_dim(self) -> int:
        """Length of the points accepted by forward()/derivatives()."""
        width = self.weights[0].shape[1]
        if self.periods is None:
            return width
        return width - len(self.periods)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.weights] + [b for b in self.biases])

    def with_flat(self, vec: np.ndarray) -> "MlpParams":
        ws, bs = _split_flat(vec, [w.shape for w in self.weights])
        return MlpParams(ws, bs, self.activation, self.periods)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         self.activation, self.periods)

    def is_finite(self) -> bool:
        return all(np.isfinite(w).all() and np.isfinite(b).all()
                   for w, b in zip(self.weights, self.biases))


@dataclass
class ParamGradient:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.weights] + [b for b in self.biases])

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "ParamGradient":
        return cls([np.zeros_like(w) for w in params.weights],
                   [np.zeros_like(b) for b in params.biases])


def _split_flat(vec, shapes):
    vec = np.asarray(vec, dtype=np.float64)
    n_w = sum(r * c for r, c in shapes)
    if vec.shape != (n_w + sum(r for r, _ in shapes),):
        raise InvalidInputError("flat parameter vector has the wrong length")
    ws, bs, i, j = [], [], 0, n_w
    for r, c in shapes:
        ws.append(vec[i:i + r * c].reshape(r, c))
        bs.append(vec[j:j + r])
        i += r * c
        j += r
    return ws, bs


@dataclass
class DerivativeBundle:
    """Network value and input derivatives; arrays have one entry per point.

    Used both for the derivatives themselves and for their cotangents (the
    partial derivatives of a loss with respect to each entry), in which case
    any field may be None to mean zero.
    """

    value: np.ndarray
    grad_x: np.ndarray | None = None
    laplacian: np.ndarray | None = None
    du_dt: np.ndarray | None = None

    def is_finite(self) -> np.ndarray:
        ok = np.isfinite(self.value)
        for a in (self.grad_x, self.laplacian, self.du_dt):
            if a is not None:
                a = np.isfinite(a)
                ok = ok & (a.all(axis=-1) if a.ndim > ok.ndim else a)
        return ok

    def take(self, idx) -> "DerivativeBundle":
        pick = lambda a: None if a is None else a[idx]
        return DerivativeBundle(self.value[idx], pick(self.grad_x), pick(self.laplacian),
                                pick(self.du_dt))


def init_network(layer_sizes: Sequence[int], activation: str = "tanh", seed: int = 0,
                 periods: Sequence[float] | None = None) -> MlpParams:
    """Glorot-uniform weights, zero biases, reproducible for a given seed."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes) or sizes[-1] != 1:
        raise InvalidArchitectureError(f"invalid layer sizes {list(layer_sizes)}")
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return MlpParams(ws, bs, activation, None if periods is None else tuple(periods))


def _as_batch(params: MlpParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise InvalidInputError(
            f"expected points of length {params.input_dim}, got shape {np.shape(x)}")
    return x, single


def _n_spatial(params: MlpParams, n_in: int, time_dependent: bool) -> int:
    if params.periods is not None:
        n_sp = len(params.periods)
        if n_sp + int(time_dependent) != n_in:
            raise InvalidInputError("periodic embedding does not match the point layout")
        return n_sp
    return n_in - int(time_dependent)


def _embed(params: MlpParams, x: np.ndarray) -> np.ndarray:
    if params.periods is None:
        return x
    d = len(params.periods)
    omega = 2.0 * np.pi / np.asarray(params.periods)
    ang = x[:, :d] * omega
    feats = np.empty((x.shape[0], 2 * d + x.shape[1] - d))
    feats[:, 0:2 * d:2] = np.sin(ang)
    feats[:, 1:2 * d:2] = np.cos(ang)
    feats[:, 2 * d:] = x[:, d:]
    return feats


def _input_channels(params: MlpParams, x: np.ndarray, n_sp: int) -> np.ndarray:
    """Channels (value, d/dx_i for all inputs, d2/dx_i2 for spatial inputs) of the input map."""
    n, n_in = x.shape
    width = params.weights[0].shape[1]
    a0 = np.zeros((1 + n_in + n_sp, n, width))
    if params.periods is None:
        a0[0] = x
        for i in range(n_in):
            a0[1 + i, :, i] = 1.0
        return a0
    d = len(params.periods)
    omega = 2.0 * np.pi / np.asarray(params.periods)
    a0[0] = _embed(params, x)
    for i in range(d):
        s, c = np.sin(omega[i] * x[:, i]), np.cos(omega[i] * x[:, i])
        a0[1 + i, :, 2 * i] = omega[i] * c
        a0[1 + i, :, 2 * i + 1] = -omega[i] * s
        a0[1 + n_in + i, :, 2 * i] = -omega[i] ** 2 * s
        a0[1 + n_in + i, :, 2 * i + 1] = -omega[i] ** 2 * c
    for j in range(d, n_in):
        a0[1 + j, :, d + j] = 1.0
    return a0


def forward(params: MlpParams, x):
    """Network output at one point (scalar) or a batch of points (shape (N,))."""
    x, single = _as_batch(params, x)
    a = _embed(params, x)
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w.T + b
        if k < last:
            a = _act(params.activation, a)
    out = a[:, 0]
    return float(out[0]) if single else out


def _act(kind, z):
    if kind == "tanh":
        return np.tanh(z)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _propagate(params: MlpParams, x: np.ndarray, n_sp: int, keep: bool, fused: bool = True):
    n_in = x.shape[1]
    kind = _KIND[params.activation]
    act_fwd = _kernels.act_forward if fused else _kernels.act_forward_np
    # identity input map: the first layer's Jacobian channels are columns of W
    plain = params.periods is None
    a = x if plain else _input_channels(params, x, n_sp)
    cache = []
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        if k == 0 and plain:
            z = np.zeros((1 + n_in + n_sp, x.shape[0], w.shape[0]))
            z[0] = x @ w.T + b
            z[1:1 + n_in] = w.T[:, None, :]
        else:
            c, n, width = a.shape
            z = (a.reshape(c * n, width) @ w.T).reshape(c, n, -1)
            z[0] += b
        if k == last:
            if keep:
                cache.append((a, z, None))
            a = z
            break
        derivs = activation_derivs(params.activation, z[0])
        if keep:
            cache.append((a, z, derivs))
        a = act_fwd(kind, z, n_in, n_sp, *derivs)
    return a[:, :, 0], cache


def _backprop(params: MlpParams, cache, g: np.ndarray, n_in: int, n_sp: int,
              fused: bool = True) -> ParamGradient:
    kind = _KIND[params.activation]
    act_bwd = _kernels.act_backward if fused else _kernels.act_backward_np
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.weights)
    dz = g[:, :, None]
    for k in range(len(params.weights) - 1, -1, -1):
        a, z, derivs = cache[k]
        if derivs is not None:
            # dz holds the cotangent of this layer's activation output here
            dz = act_bwd(kind, z, dz, n_in, n_sp, *derivs)
        grad_b[k] = dz[0].sum(axis=0)
        if a.ndim == 2:
            grad_w[k] = dz[0].T @ a + dz[1:1 + n_in].sum(axis=1).T
            break
        c, n, width_out = dz.shape
        flat_dz = dz.reshape(c * n, width_out)
        grad_w[k] = flat_dz.T @ a.reshape(c * n, -1)
        if k > 0:
            dz = (flat_dz @ params.weights[k]).reshape(c, n, -1)
    return ParamGradient(grad_w, grad_b)


def _bundle(out: np.ndarray, n_in: int, n_sp: int, time_dependent: bool) -> DerivativeBundle:
    return DerivativeBundle(
        value=out[0],
        grad_x=out[1:1 + n_sp].T,
        laplacian=out[1 + n_in:1 + n_in + n_sp].sum(axis=0),
        du_dt=out[1 + n_sp] if time_dependent else None,
    )


def _chunks(n: int):
    for i in range(0, n, _CHUNK):
        yield slice(i, min(i + _CHUNK, n))


def _propagate_all(params, x, n_sp):
    if x.shape[0] == 0:
        return np.zeros((1 + x.shape[1] + n_sp, 0))
    return np.concatenate([_propagate(params, x[c], n_sp, keep=False)[0]
                           for c in _chunks(x.shape[0])], axis=1)


def derivatives(params: MlpParams, x, time_dependent: bool = False) -> DerivativeBundle:
    """Value, spatial gradient, Laplacian and (optionally) time derivative.

    Spatial coordinates come first in ``x``; with ``time_dependent`` the last
    coordinate is time. Accepts a single point or an (N, input_dim) batch.
    """
    x, single = _as_batch(params, x)
    n_sp = _n_spatial(params, x.shape[1], time_dependent)
    out = _propagate_all(params, x, n_sp)
    bundle = _bundle(out, x.shape[1], n_sp, time_dependent)
    if single:
        return DerivativeBundle(
            float(bundle.value[0]), bundle.grad_x[0], float(bundle.laplacian[0]),
            None if bundle.du_dt is None else float(bundle.du_dt[0]))
    return bundle


LossFn = Callable[[DerivativeBundle], "tuple[float, DerivativeBundle]"]


def loss_gradient(params: MlpParams, x, loss: LossFn,
                  time_dependent: bool = False) -> tuple[float, ParamGradient]:
    """Value and parameter gradient of ``loss(derivatives(params, x))``.

    ``loss`` receives the batched bundle and must return ``(value, cotangent)``
    where the cotangent bundle holds d(value)/d(entry) for every bundle entry
    the loss depends on.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1, params.input_dim)
    n_in = x.shape[1]
    n_sp = _n_spatial(params, n_in, time_dependent)
    bundle = _bundle(_propagate_all(params, x, n_sp), n_in, n_sp, time_dependent)
    bad = np.flatnonzero(~bundle.is_finite())
    if bad.size:
        raise NumericalFailureError("non-finite network derivatives", int(bad[0]))
    value, cot = loss(bundle)
    value = float(value)
    if not np.isfinite(value):
        bad = np.flatnonzero(~cot.is_finite()) if cot is not None else np.array([])
        raise NumericalFailureError("non-finite loss", int(bad[0]) if bad.size else None)
    n = x.shape[0]
    g = np.zeros((1 + n_in + n_sp, n))
    g[0] = cot.value
    if cot.grad_x is not None:
        g[1:1 + n_sp] = np.asarray(cot.grad_x).T
    if cot.du_dt is not None:
        g[1 + n_sp] = cot.du_dt
    if cot.laplacian is not None:
        g[1 + n_in:] = cot.laplacian
    # second sweep recomputes the forward pass chunk by chunk so the cached
    # channel stacks stay small enough to remain in cache
    total = ParamGradient.zeros_like(params)
    for c in _chunks(n):
        _, cache = _propagate(params, x[c], n_sp, keep=True)
        part = _backprop(params, cache, g[:, c], n_in, n_sp)
        for acc, new in zip(total.weights + total.biases, part.weights + part.biases):
            acc += new
    return value, total

"""Reference feature network and the squared-hinge head that trains it.

The network is a small stack of 'same'-padded convolutions and dense layers
without biases. Backpropagation is written out by hand so every parameter
gradient can be checked against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import NonFinite, ShapeMismatch
from .serialization import hexify, unhex

ACTIVATIONS = ("relu", "tanh", "identity")


def _act(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "relu":
        return (z > 0).astype(np.float64)
    return np.ones_like(z)


@dataclass(frozen=True, eq=False)
class Layer:
    """``dense`` weights are (out, in); ``conv`` weights are (out_ch, in_ch, kh, kw)."""

    kind: str
    weights: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        if self.kind not in ("dense", "conv"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        w = np.array(self.weights, dtype=np.float64)
        if self.kind == "dense" and w.ndim != 2:
            raise ShapeMismatch("dense weights must be 2-D")
        if self.kind == "conv" and (w.ndim != 4 or w.shape[2] % 2 == 0 or w.shape[3] % 2 == 0):
            raise ShapeMismatch("conv weights must be (out, in, kh, kw) with odd kh, kw")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True, eq=False)
class FeatureNet:
    """``input_shape`` is ``(n,)`` for a dense first layer or ``(C, H, W)`` for a conv one."""

    input_shape: tuple
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        shape = self.input_shape
        for k, layer in enumerate(self.layers):
            shape = _layer_out_shape(layer, shape, k)

    @property
    def output_dim(self) -> int:
        shape = self.input_shape
        for k, layer in enumerate(self.layers):
            shape = _layer_out_shape(layer, shape, k)
        return math.prod(shape)

    @property
    def input_dim(self) -> int:
        return math.prod(self.input_shape)

    @property
    def theta(self) -> np.ndarray:
        if not self.layers:
            return np.zeros(0)
        return np.concatenate([l.weights.reshape(-1) for l in self.layers])

    @property
    def n_params(self) -> int:
        return sum(l.weights.size for l in self.layers)

    def with_theta(self, theta) -> "FeatureNet":
        theta = np.asarray(theta, dtype=np.float64)
        if theta.size != self.n_params:
            raise ShapeMismatch(f"theta has {theta.size} entries, net has {self.n_params}")
        out, pos = [], 0
        for l in self.layers:
            n = l.weights.size
            out.append(replace(l, weights=theta[pos:pos + n].reshape(l.weights.shape)))
            pos += n
        return FeatureNet(self.input_shape, tuple(out))

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "input_shape": list(self.input_shape),
            "layers": [
                {
                    "kind": l.kind,
                    "activation": l.activation,
                    "shape": list(l.weights.shape),
                    "weights": hexify(l.weights.reshape(-1)),
                }
                for l in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureNet":
        layers = [
            Layer(l["kind"], unhex(l["weights"]).reshape(l["shape"]), l["activation"])
            for l in d["layers"]
        ]
        return cls(tuple(d["input_shape"]), tuple(layers))


def _layer_out_shape(layer: Layer, shape: tuple, k: int) -> tuple:
    w = layer.weights
    if layer.kind == "dense":
        if w.shape[1] != math.prod(shape):
            raise ShapeMismatch(f"layer {k}: dense expects {w.shape[1]} inputs, gets {math.prod(shape)}")
        return (w.shape[0],)
    if len(shape) != 3 or shape[0] != w.shape[1]:
        raise ShapeMismatch(f"layer {k}: conv expects {w.shape[1]} channels on a (C, H, W) input, gets {shape}")
    return (w.shape[0], shape[1], shape[2])


def init_weights(shape, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-0.1, 0.1, size=shape)


def dense_net(sizes: Sequence[int], activation: str = "tanh", seed: int = 0,
              final_activation: Optional[str] = None) -> FeatureNet:
    """Fully connected net with layer widths ``sizes = (n0, n1, ..., nL)``."""
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(1, len(sizes)):
        act = activation
        if k == len(sizes) - 1 and final_activation is not None:
            act = final_activation
        layers.append(Layer("dense", init_weights((sizes[k], sizes[k - 1]), rng), act))
    return FeatureNet((sizes[0],), tuple(layers))


def reference_net(
    input_dim: int,
    output_dim: int = 8,
    channels: int = 4,
    kernel_size: int = 3,
    activation: str = "tanh",
    seed: int = 0,
    image_shape: Optional[tuple] = None,
) -> FeatureNet:
    """One convolution followed by one dense layer.

    Vector inputs are treated as a one-row image, so the convolution is a
    ``1 x kernel_size`` filter bank; pass ``image_shape=(H, W)`` to use a
    ``kernel_size x kernel_size`` filter on a 2-D input instead.
    """
    rng = np.random.default_rng(seed)
    if image_shape is None:
        shape = (1, 1, int(input_dim))
        kshape = (channels, 1, 1, kernel_size)
    else:
        h, w = image_shape
        if h * w != input_dim:
            raise ShapeMismatch("image_shape does not match input_dim")
        shape = (1, int(h), int(w))
        kshape = (channels, 1, kernel_size, kernel_size)
    conv = Layer("conv", init_weights(kshape, rng), activation)
    n_flat = channels * shape[1] * shape[2]
    dense = Layer("dense", init_weights((output_dim, n_flat), rng), activation)
    return FeatureNet(shape, (conv, dense))


def _as_batch(net: FeatureNet, x) -> tuple[np.ndarray, bool]:
    xa = np.asarray(x, dtype=np.float64)
    n_in = net.input_dim
    if xa.shape == net.input_shape or (xa.ndim == 1 and xa.size == n_in):
        return xa.reshape((1,) + net.input_shape), True
    if xa.ndim >= 2 and math.prod(xa.shape[1:]) == n_in:
        return xa.reshape((xa.shape[0],) + net.input_shape), False
    raise ShapeMismatch(f"input of shape {xa.shape} does not fit net input {net.input_shape}")


def forward_cache(net: FeatureNet, X):
    """Batch forward pass returning (features (B, d), cache for ``backward``)."""
    a, _ = _as_batch(net, X)
    cache = []
    for layer in net.layers:
        if layer.kind == "dense":
            a_in = a.reshape(a.shape[0], -1)
            z = a_in @ layer.weights.T
        else:
            a_in = a
            z = _kernels.conv2d_forward(a_in, layer.weights)
        a = _act(layer.activation, z)
        cache.append((a_in, z, a))
    return a.reshape(a.shape[0], -1), cache


def forward(net: FeatureNet, x) -> np.ndarray:
    """f_theta(x) for one input (returns a vector) or a batch (returns rows)."""
    _, single = _as_batch(net, x)
    out, _ = forward_cache(net, x)
    return out[0] if single else out


def backward(net: FeatureNet, cache, grad_features) -> tuple[list, np.ndarray]:
    """Chain rule from dL/d(features) to (per-layer weight grads, dL/d(input))."""
    g = np.asarray(grad_features, dtype=np.float64)
    grads = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        a_in, z, a = cache[k]
        g = g.reshape(z.shape)
        delta = g * _act_grad(layer.activation, z, a)
        if layer.kind == "dense":
            grads[k] = delta.T @ a_in
            g = delta @ layer.weights
        else:
            g, grads[k] = _kernels.conv2d_backward(a_in, layer.weights, delta)
        if k > 0:
            g = g.reshape(cache[k - 1][2].shape)
    return grads, g


@dataclass(frozen=True, eq=False)
class HingeHead:
    """One-vs-rest squared-hinge classifier on the features, ``w`` is (g, d)."""

    w: np.ndarray
    C: float = 1.0
    lr: float = 0.01
    max_iter: int = 50

    def __post_init__(self):
        w = np.atleast_2d(np.array(self.w, dtype=np.float64))
        object.__setattr__(self, "w", w)
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.lr > 0:
            raise ValueError("lr must be positive")

    @classmethod
    def zeros(cls, g: int, d: int, **kw) -> "HingeHead":
        return cls(np.zeros((g, d)), **kw)


def signed_targets(pseudo_labels) -> np.ndarray:
    """One-hot {0,1} rows mapped to +-1 one-vs-rest targets."""
    y = np.atleast_2d(np.asarray(pseudo_labels, dtype=np.float64))
    if not np.all(np.isin(y, (0.0, 1.0))) or not np.allclose(y.sum(axis=1), 1.0):
        raise ShapeMismatch("pseudo labels must be one-hot rows")
    return 2.0 * y - 1.0


def _margins(head: HingeHead, F: np.ndarray, T: np.ndarray) -> np.ndarray:
    if F.shape[1] != head.w.shape[1] or T.shape != (F.shape[0], head.w.shape[0]):
        raise ShapeMismatch(
            f"features {F.shape}, targets {T.shape} and head {head.w.shape} do not line up"
        )
    return np.maximum(1.0 - T * (F @ head.w.T), 0.0)


def hinge_loss(head: HingeHead, features, pseudo_labels) -> float:
    """1/2 |w|^2 + C sum_i sum_c max(1 - t_ic w_c . f_i, 0)^2."""
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    slack = _margins(head, F, signed_targets(pseudo_labels))
    return float(0.5 * np.sum(head.w ** 2) + head.C * np.sum(slack ** 2))


def grad_penultimate(head: HingeHead, h, targets) -> np.ndarray:
    """dL/dh = -2C sum_c t_c w_c max(1 - t_c w_c . h, 0) for one feature vector.

    ``targets`` holds the +-1 target of every class.
    """
    h = np.asarray(h, dtype=np.float64).reshape(1, -1)
    t = np.asarray(targets, dtype=np.float64).reshape(1, -1)
    slack = _margins(head, h, t)
    return (-2.0 * head.C * (t * slack) @ head.w)[0]


def _loss_grads(head: HingeHead, F: np.ndarray, T: np.ndarray):
    slack = _margins(head, F, T)
    coef = -2.0 * head.C * T * slack  # (B, g)
    grad_f = coef @ head.w
    grad_w = head.w + coef.T @ F
    return grad_f, grad_w


def total_loss(net: FeatureNet, head: HingeHead, X, pseudo_labels) -> float:
    F, _ = forward_cache(net, X)
    return hinge_loss(head, F, pseudo_labels)


def parameter_gradients(net: FeatureNet, head: HingeHead, X, pseudo_labels):
    """(net weight grads per layer, head weight grad) of the total loss."""
    F, cache = forward_cache(net, X)
    T = signed_targets(pseudo_labels)
    grad_f, grad_w = _loss_grads(head, F, T)
    grads, _ = backward(net, cache, grad_f)
    return grads, grad_w


def train_step(net: FeatureNet, head: HingeHead, X, pseudo_labels, lr: Optional[float] = None,
               update_head: bool = True):
    """One gradient-descent step on the network weights (and the head unless disabled)."""
    lr = head.lr if lr is None else float(lr)
    X = np.asarray(X)
    if X.shape[0] == 0:
        raise ShapeMismatch("empty batch")
    grads, grad_w = parameter_gradients(net, head, X, pseudo_labels)
    if not all(np.all(np.isfinite(g)) for g in grads) or not np.all(np.isfinite(grad_w)):
        raise NonFinite("non-finite gradient")
    new_layers = tuple(
        replace(l, weights=l.weights - lr * g) for l, g in zip(net.layers, grads)
    )
    new_net = FeatureNet(net.input_shape, new_layers)
    new_head = replace(head, w=head.w - lr * grad_w) if update_head else head
    return new_net, new_head


def fit_head(head: HingeHead, features, pseudo_labels, iters: Optional[int] = None) -> HingeHead:
    """Gradient descent on the head weights alone with the features held fixed.

    The step is ``head.lr`` capped at the inverse Lipschitz constant of the
    gradient, so every iteration is a descent step.
    """
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    T = signed_targets(pseudo_labels)
    w = head.w
    iters = head.max_iter if iters is None else int(iters)
    # the objective is convex with a (1 + 2C |F|_2^2)-Lipschitz gradient; a
    # step no larger than its inverse cannot increase the loss
    lip = 1.0 + 2.0 * head.C * float(np.linalg.norm(F, 2)) ** 2 if F.size else 1.0
    lr = min(head.lr, 1.0 / lip)
    cur = head
    for _ in range(iters):
        _, grad_w = _loss_grads(cur, F, T)
        if not np.all(np.isfinite(grad_w)):
            raise NonFinite("non-finite head gradient")
        w = w - lr * grad_w
        cur = replace(head, w=w)
    return cur

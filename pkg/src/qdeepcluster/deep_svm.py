"""Layered SVM network.

Each hidden layer holds ``v`` multiclass SVMs; a layer's output is the
concatenation, SVM by SVM and pair by pair, of the bias-free kernel sums
``sum_i alpha_i K(x_i, x)``. Layers are trained greedily on the previous
layer's outputs with the same labels, and a final multiclass SVM classifies
the last hidden representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .allpair import MulticlassSVMModel, classify_all_pairs, train_multiclass
from .errors import ConfigError, DimensionMismatch
from .lssvm import BinarySVMModel, KernelSpec
from .qsvm import EXACT_SPECTRAL, InversionMode, QuantumSVMModel
from .serialization import hex_complex, hexify, unhex, unhex_complex
from .statevector import EXACT, ShotPlan, StateVec

SCHEMA = 1


@dataclass(frozen=True)
class DeepSVMConfig:
    """``kernels[k]``/``etas[k]`` are one value for every SVM of hidden layer
    ``k`` or a sequence with one value per SVM."""

    layer_widths: tuple = ()
    kernels: tuple = ()
    etas: tuple = ()
    g: int = 2
    final_kernel: KernelSpec = field(default_factory=KernelSpec)
    final_eta: float = 1.0
    eps_k: Optional[float] = None
    mode: InversionMode = EXACT_SPECTRAL

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(v) for v in self.layer_widths))
        if any(v < 1 for v in self.layer_widths):
            raise ValueError("every hidden layer needs at least one SVM")
        for name in ("kernels", "etas"):
            vals = tuple(getattr(self, name))
            if vals and len(vals) != len(self.layer_widths):
                raise ValueError(f"{name} must have one entry per hidden layer")
            object.__setattr__(self, name, vals)

    @property
    def depth(self) -> int:
        return len(self.layer_widths)

    def node_kernel(self, layer: int, v: int) -> KernelSpec:
        if not self.kernels:
            return KernelSpec()
        entry = self.kernels[layer]
        return entry if isinstance(entry, KernelSpec) else entry[v]

    def node_eta(self, layer: int, v: int) -> float:
        if not self.etas:
            return 1.0
        entry = self.etas[layer]
        return float(entry) if np.isscalar(entry) else float(entry[v])

    def to_dict(self) -> dict:
        def kern(entry):
            if isinstance(entry, KernelSpec):
                return entry.to_dict()
            return [k.to_dict() for k in entry]

        return {
            "layer_widths": list(self.layer_widths),
            "kernels": [kern(k) for k in self.kernels],
            "etas": [e if np.isscalar(e) else list(e) for e in self.etas],
            "g": self.g,
            "final_kernel": self.final_kernel.to_dict(),
            "final_eta": self.final_eta,
            "eps_k": self.eps_k,
            "mode": self.mode.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeepSVMConfig":
        allowed = {"layer_widths", "kernels", "etas", "g", "final_kernel", "final_eta", "eps_k", "mode"}
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown deep_svm keys {sorted(extra)}")

        def kern(entry):
            if isinstance(entry, dict):
                return KernelSpec.from_dict(entry)
            return tuple(KernelSpec.from_dict(k) for k in entry)

        return cls(
            layer_widths=tuple(d.get("layer_widths", ())),
            kernels=tuple(kern(k) for k in d.get("kernels", ())),
            etas=tuple(e if np.isscalar(e) else tuple(e) for e in d.get("etas", ())),
            g=int(d.get("g", 2)),
            final_kernel=KernelSpec.from_dict(d.get("final_kernel", {"kind": "linear"})),
            final_eta=float(d.get("final_eta", 1.0)),
            eps_k=d.get("eps_k"),
            mode=InversionMode.from_dict(d.get("mode", {"kind": "exact_spectral"})),
        )


@dataclass(frozen=True, eq=False)
class DeepSVMStack:
    config: DeepSVMConfig
    hidden_layers: list
    final: MulticlassSVMModel
    layer_inputs: list
    labels: np.ndarray

    @property
    def activation_dims(self) -> list:
        return [sum(len(m.binaries) for m in layer) for layer in self.hidden_layers]

    @property
    def quantum(self) -> bool:
        return self.final.quantum


def layer_activation(layer: Sequence[MulticlassSVMModel], x) -> np.ndarray:
    """Concatenated bias-free activations of one hidden layer.

    ``x`` may be a single vector or a row-stacked batch.
    """
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim == 1
    xb = np.atleast_2d(xa)
    cols = []
    for svm in layer:
        for binary in svm.binaries:
            if xb.shape[1] != binary.support.shape[1]:
                raise DimensionMismatch(
                    f"layer expects dim {binary.support.shape[1]}, got {xb.shape[1]}"
                )
            cols.append(binary.kernel(xb, binary.support) @ binary.alpha)
    out = np.stack(cols, axis=1) if cols else np.zeros((xb.shape[0], 0))
    return out[0] if single else out


def transform(stack: DeepSVMStack, X) -> np.ndarray:
    """Hidden-layer transform applied to a vector or a batch."""
    h = np.asarray(X, dtype=np.float64)
    for layer in stack.hidden_layers:
        h = layer_activation(layer, h)
    return h


def train_stack(
    config: DeepSVMConfig,
    X,
    labels,
    mode: Optional[InversionMode] = None,
    quantum: bool = True,
) -> DeepSVMStack:
    """Greedy layer-wise training; ``quantum=False`` builds the classical oracle stack."""
    mode = config.mode if mode is None else mode
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    inputs = X
    hidden, layer_inputs = [], []
    for k, width in enumerate(config.layer_widths):
        layer = [
            train_multiclass(
                inputs,
                labels,
                config.node_kernel(k, v),
                config.node_eta(k, v),
                config.eps_k,
                mode,
                g=config.g,
                quantum=quantum,
            )
            for v in range(width)
        ]
        hidden.append(layer)
        layer_inputs.append(inputs)
        inputs = layer_activation(layer, inputs)
    layer_inputs.append(inputs)
    final = train_multiclass(
        inputs, labels, config.final_kernel, config.final_eta, config.eps_k, mode,
        g=config.g, quantum=quantum,
    )
    return DeepSVMStack(config, hidden, final, layer_inputs, labels.copy())


def classify_stack(
    stack: DeepSVMStack,
    x,
    plan: ShotPlan = EXACT,
    oracle: bool = True,
) -> int:
    return classify_all_pairs(stack.final, transform(stack, x), plan, oracle)


def predict_stack(stack: DeepSVMStack, X, plan: ShotPlan = EXACT, oracle: bool = True) -> np.ndarray:
    H = transform(stack, X)
    return np.array([classify_all_pairs(stack.final, h, plan, oracle) for h in H], dtype=np.int64)


# serialization

def _pair_indices(labels: np.ndarray, pair) -> np.ndarray:
    i, j = pair
    return np.flatnonzero((labels == i) | (labels == j))


def _binary_to_dict(model, labels) -> dict:
    d = {
        "class_pair": list(model.class_pair),
        "support_indices": _pair_indices(labels, model.class_pair).tolist(),
        "kernel": model.kernel.to_dict(),
        "eta": float(model.eta).hex(),
    }
    if isinstance(model, QuantumSVMModel):
        d.update(
            kind="quantum",
            state=hex_complex(model.state.amplitudes),
            norm_scale=float(model.norm_scale).hex(),
            eps_k=float(model.eps_k).hex(),
            mode=model.mode.to_dict(),
        )
    else:
        d.update(kind="classical", b=float(model.b).hex(), alpha=hexify(model.alpha))
    d["b_alpha"] = hexify(np.concatenate([[model.b], model.alpha]))
    return d


def _binary_from_dict(d: dict, inputs: np.ndarray, labels: np.ndarray):
    idx = np.asarray(d["support_indices"], dtype=np.int64)
    pair = tuple(d["class_pair"])
    support = inputs[idx]
    y = np.where(labels[idx] == pair[0], 1.0, -1.0)
    kernel = KernelSpec.from_dict(d["kernel"])
    eta = float.fromhex(d["eta"])
    if d["kind"] == "quantum":
        return QuantumSVMModel(
            state=StateVec(unhex_complex(d["state"])),
            norm_scale=float.fromhex(d["norm_scale"]),
            support=support,
            labels=y,
            kernel=kernel,
            mode=InversionMode.from_dict(d["mode"]),
            eta=eta,
            eps_k=float.fromhex(d["eps_k"]),
            class_pair=pair,
        )
    return BinarySVMModel(
        b=float.fromhex(d["b"]),
        alpha=unhex(d["alpha"]),
        support=support,
        labels=y,
        kernel=kernel,
        class_pair=pair,
        eta=eta,
    )


def _multiclass_to_dict(model: MulticlassSVMModel, labels) -> dict:
    return {
        "g": model.g,
        "m_max": model.m_max,
        "kernel": model.kernel.to_dict(),
        "eta": float(model.eta).hex(),
        "binaries": [_binary_to_dict(b, labels) for b in model.binaries],
    }


def _multiclass_from_dict(d: dict, inputs, labels) -> MulticlassSVMModel:
    return MulticlassSVMModel(
        g=int(d["g"]),
        binaries=[_binary_from_dict(b, inputs, labels) for b in d["binaries"]],
        m_max=int(d["m_max"]),
        kernel=KernelSpec.from_dict(d["kernel"]),
        eta=float.fromhex(d["eta"]),
    )


def _matrix_to_dict(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": hexify(a.reshape(-1))}


def _matrix_from_dict(d: dict) -> np.ndarray:
    return unhex(d["data"]).reshape(d["shape"])


def stack_to_dict(stack: DeepSVMStack) -> dict:
    return {
        "schema": SCHEMA,
        "config": stack.config.to_dict(),
        "labels": stack.labels.tolist(),
        "layer_inputs": [_matrix_to_dict(a) for a in stack.layer_inputs],
        "hidden_layers": [
            [_multiclass_to_dict(m, stack.labels) for m in layer] for layer in stack.hidden_layers
        ],
        "final": _multiclass_to_dict(stack.final, stack.labels),
    }


def stack_from_dict(d: dict) -> DeepSVMStack:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported stack schema {d.get('schema')!r}")
    labels = np.asarray(d["labels"], dtype=np.int64)
    inputs = [_matrix_from_dict(a) for a in d["layer_inputs"]]
    hidden = [
        [_multiclass_from_dict(m, inputs[k], labels) for m in layer]
        for k, layer in enumerate(d["hidden_layers"])
    ]
    final = _multiclass_from_dict(d["final"], inputs[-1], labels)
    return DeepSVMStack(DeepSVMConfig.from_dict(d["config"]), hidden, final, inputs, labels)


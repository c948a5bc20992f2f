"""Deep clustering loop.

Every epoch extracts features, clusters them with quantum K-Means, trains
the quantum deep SVM on the resulting pseudo-labels, refits the hinge head
and takes gradient steps on the feature network. The deep SVM never
receives gradients; the hinge head is the only path back into the network.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .deep_svm import DeepSVMConfig, DeepSVMStack, predict_stack, stack_to_dict, train_stack
from .errors import ConfigError
from .feature_extractor import (
    FeatureNet,
    HingeHead,
    dense_net,
    fit_head,
    forward,
    hinge_loss,
    reference_net,
    train_step,
)
from .qkmeans import AnnealParams, ClusterResult, means_with_repair, qkmeans_run
from .serialization import write_json
from .statevector import ShotPlan

SCHEMA = 1


def _strict(cls, d: Optional[dict], section: str):
    d = {} if d is None else dict(d)
    names = {f.name for f in fields(cls)}
    extra = set(d) - names
    if extra:
        raise ConfigError(f"unknown {section} keys {sorted(extra)}")
    return d


@dataclass(frozen=True)
class NetSpec:
    """``reference`` is conv + dense; ``dense`` uses ``sizes[1:]`` after the input width."""

    kind: str = "reference"
    output_dim: int = 8
    channels: int = 4
    kernel_size: int = 3
    activation: str = "tanh"
    sizes: tuple = ()
    image_shape: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("reference", "dense"):
            raise ConfigError(f"unknown net kind {self.kind!r}")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if self.image_shape is not None:
            object.__setattr__(self, "image_shape", tuple(int(s) for s in self.image_shape))

    def build(self, input_dim: int, seed: int) -> FeatureNet:
        if self.kind == "dense":
            return dense_net((input_dim,) + self.sizes, self.activation, seed)
        return reference_net(
            input_dim,
            self.output_dim,
            self.channels,
            self.kernel_size,
            self.activation,
            seed,
            self.image_shape,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "output_dim": self.output_dim,
            "channels": self.channels,
            "kernel_size": self.kernel_size,
            "activation": self.activation,
            "sizes": list(self.sizes),
            "image_shape": None if self.image_shape is None else list(self.image_shape),
        }

    @classmethod
    def from_dict(cls, d) -> "NetSpec":
        return cls(**_strict(cls, d, "net"))


@dataclass(frozen=True)
class HeadSpec:
    C: float = 1.0
    lr: float = 0.01
    max_iter: int = 50

    def build(self, g: int, d: int) -> HingeHead:
        return HingeHead.zeros(g, d, C=self.C, lr=self.lr, max_iter=self.max_iter)

    def to_dict(self) -> dict:
        return {"C": self.C, "lr": self.lr, "max_iter": self.max_iter}

    @classmethod
    def from_dict(cls, d) -> "HeadSpec":
        return cls(**_strict(cls, d, "head"))


@dataclass(frozen=True)
class KMeansSpec:
    iters: int = 100
    t_anneal: float = 50.0
    steps: int = 400
    normalize: bool = True
    copies: int = 1

    @property
    def anneal(self) -> AnnealParams:
        return AnnealParams(self.t_anneal, self.steps, self.normalize)

    def to_dict(self) -> dict:
        return {
            "iters": self.iters,
            "t_anneal": self.t_anneal,
            "steps": self.steps,
            "normalize": self.normalize,
            "copies": self.copies,
        }

    @classmethod
    def from_dict(cls, d) -> "KMeansSpec":
        return cls(**_strict(cls, d, "kmeans"))


def default_deep_svm(K: int) -> DeepSVMConfig:
    return DeepSVMConfig(layer_widths=(2,), g=max(K, 2))


@dataclass(frozen=True)
class PipelineConfig:
    epochs: int = 20
    K: int = 3
    deep_svm: Optional[DeepSVMConfig] = None
    net: NetSpec = field(default_factory=NetSpec)
    head: HeadSpec = field(default_factory=HeadSpec)
    kmeans: KMeansSpec = field(default_factory=KMeansSpec)
    net_lr: float = 0.01
    net_steps: int = 1
    mode: str = "exact"
    shots: int = 1024
    master_seed: int = 0

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ConfigError("epochs must be positive")
        if int(self.K) < 1:
            raise ConfigError("K must be positive")
        if self.deep_svm is None:
            object.__setattr__(self, "deep_svm", default_deep_svm(int(self.K)))
        elif self.K >= 2 and self.deep_svm.g != self.K:
            raise ConfigError(f"deep_svm.g={self.deep_svm.g} must equal K={self.K}")
        if self.net_lr < 0:
            raise ConfigError("net_lr must be non-negative")
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    def plan(self, epoch: int) -> ShotPlan:
        """Per-epoch measurement plan with its own seed stream."""
        seed = int(
            np.random.SeedSequence(int(self.master_seed), spawn_key=(int(epoch),)).generate_state(
                1, np.uint64
            )[0]
        )
        return ShotPlan(shots=int(self.shots), seed=seed, mode=self.mode)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "epochs": self.epochs,
            "K": self.K,
            "deep_svm": self.deep_svm.to_dict(),
            "net": self.net.to_dict(),
            "head": self.head.to_dict(),
            "kmeans": self.kmeans.to_dict(),
            "net_lr": self.net_lr,
            "net_steps": self.net_steps,
            "mode": self.mode,
            "shots": self.shots,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        d.pop("schema", None)
        d = _strict(cls, d, "pipeline")
        kw = dict(d)
        if "deep_svm" in d and d["deep_svm"] is not None:
            kw["deep_svm"] = DeepSVMConfig.from_dict(d["deep_svm"])
        for key, spec in (("net", NetSpec), ("head", HeadSpec), ("kmeans", KMeansSpec)):
            if key in d:
                kw[key] = spec.from_dict(d[key])
        return cls(**kw)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    hinge_loss: float
    kmeans_objective: float
    churn: float
    kmeans_iterations: int
    kmeans_converged: bool
    seeds: tuple
    svm_agreement: Optional[float] = None
    purity: Optional[float] = None
    nmi: Optional[float] = None
    accuracy: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "epoch": self.epoch,
            "hinge_loss": self.hinge_loss,
            "kmeans_objective": self.kmeans_objective,
            "churn": self.churn,
            "kmeans_iterations": self.kmeans_iterations,
            "kmeans_converged": self.kmeans_converged,
            "seeds": list(self.seeds),
            "svm_agreement": self.svm_agreement,
            "purity": self.purity,
            "nmi": self.nmi,
            "accuracy": self.accuracy,
        }


@dataclass(frozen=True, eq=False)
class PipelineState:
    config: PipelineConfig
    X: np.ndarray
    truth: Optional[np.ndarray]
    net: FeatureNet
    head: HingeHead
    epoch: int = 0
    assignments: Optional[np.ndarray] = None
    cluster: Optional[ClusterResult] = None
    stack: Optional[DeepSVMStack] = None


def init_state(config: PipelineConfig, X, truth=None) -> PipelineState:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ConfigError("dataset must be a non-empty (M, N) array")
    if X.shape[0] < config.K:
        raise ConfigError(f"K={config.K} exceeds the number of points {X.shape[0]}")
    net_seed = int(np.random.SeedSequence(int(config.master_seed), spawn_key=(1,)).generate_state(1)[0])
    net = config.net.build(X.shape[1], net_seed)
    head = config.head.build(config.K, net.output_dim)
    t = None if truth is None else np.asarray(truth, dtype=np.int64)
    return PipelineState(config, X, t, net, head)


def initial_seeds(features: np.ndarray, K: int, master_seed: int) -> np.ndarray:
    """First K pairwise-distinct points under the master seed's shuffle."""
    rng = np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(0,)))
    order = rng.permutation(features.shape[0])
    chosen = []
    for j in order:
        if all(not np.array_equal(features[j], features[c]) for c in chosen):
            chosen.append(int(j))
            if len(chosen) == K:
                break
    if len(chosen) < K:
        raise ConfigError(f"fewer than K={K} distinct feature vectors")
    return np.array(chosen, dtype=np.int64)


def warm_seeds(features: np.ndarray, assignments: np.ndarray, K: int) -> np.ndarray:
    """Points nearest the previous clusters' means in the current feature space."""
    centroids, _ = means_with_repair(features, assignments, K)
    d = np.sum((features[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    chosen = []
    for c in range(K):
        for j in np.argsort(d[:, c], kind="stable"):
            if int(j) not in chosen and all(
                not np.array_equal(features[j], features[p]) for p in chosen
            ):
                chosen.append(int(j))
                break
    if len(chosen) < K:
        raise ConfigError(f"fewer than K={K} distinct feature vectors")
    return np.array(chosen, dtype=np.int64)


def run_epoch(state: PipelineState) -> tuple[PipelineState, EpochReport]:
    cfg = state.config
    K = cfg.K
    plan = cfg.plan(state.epoch)
    features = forward(state.net, state.X)
    features = np.atleast_2d(features)

    if state.assignments is None:
        seeds = initial_seeds(features, K, cfg.master_seed)
    else:
        seeds = warm_seeds(features, state.assignments, K)
    result, _ = qkmeans_run(
        features, K, seeds, cfg.kmeans.iters, plan, cfg.kmeans.anneal, cfg.kmeans.copies
    )
    assign = result.assignments
    pseudo = result.pseudo_labels

    stack = None
    agreement = None
    if K >= 2:
        stack = train_stack(cfg.deep_svm, features, assign)
        agreement = float(np.mean(predict_stack(stack, features, plan) == assign))

    head = fit_head(state.head, features, pseudo)
    loss = hinge_loss(head, features, pseudo)
    net = state.net
    if cfg.net_lr > 0:
        for _ in range(int(cfg.net_steps)):
            net, _ = train_step(net, head, state.X, pseudo, lr=cfg.net_lr, update_head=False)

    churn = metrics.churn(state.assignments, assign) if state.assignments is not None else 1.0
    report = EpochReport(
        epoch=state.epoch,
        hinge_loss=loss,
        kmeans_objective=result.objective,
        churn=churn,
        kmeans_iterations=result.iterations,
        kmeans_converged=result.converged,
        seeds=tuple(int(s) for s in seeds),
        svm_agreement=agreement,
    )
    if state.truth is not None:
        report = replace(
            report,
            purity=metrics.purity(assign, state.truth),
            nmi=metrics.nmi(assign, state.truth),
            accuracy=metrics.matched_accuracy(assign, state.truth),
        )
    new_state = replace(
        state,
        net=net,
        head=head,
        epoch=state.epoch + 1,
        assignments=assign,
        cluster=result,
        stack=stack,
    )
    return new_state, report


@dataclass(frozen=True, eq=False)
class PipelineResult:
    state: PipelineState
    reports: list
    run_dir: Optional[Path] = None

    @property
    def final(self) -> EpochReport:
        return self.reports[-1]

    def summary(self) -> dict:
        last = self.final
        return {
            "schema": SCHEMA,
            "config_hash": self.state.config.digest(),
            "master_seed": self.state.config.master_seed,
            "epochs": len(self.reports),
            "K": self.state.config.K,
            "final": last.to_dict(),
            "purity": last.purity,
            "nmi": last.nmi,
            "accuracy": last.accuracy,
            "churn": last.churn,
            "assignments": self.state.assignments.tolist(),
        }


def run_dir_name(config: PipelineConfig) -> str:
    return f"{config.digest()}-seed{config.master_seed}"


def run_pipeline(config: PipelineConfig, X, truth=None, out_dir=None) -> PipelineResult:
    """Runs every epoch; with ``out_dir`` all artifacts go to ``out_dir/<hash>-seed<s>``."""
    state = init_state(config, X, truth)
    reports = []
    for _ in range(config.epochs):
        state, report = run_epoch(state)
        reports.append(report)
    run_dir = None
    result = PipelineResult(state, reports)
    if out_dir is not None:
        run_dir = Path(out_dir) / run_dir_name(config)
        write_artifacts(result, run_dir)
        result = PipelineResult(state, reports, run_dir)
    return result


def write_artifacts(result: PipelineResult, run_dir: Path) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    state = result.state
    write_json(run_dir / "config.json", state.config.to_dict())
    with open(run_dir / "epochs.jsonl", "w") as fh:
        for r in result.reports:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    write_json(run_dir / "summary.json", result.summary())
    write_json(run_dir / "cluster.json", state.cluster.to_dict())
    write_json(run_dir / "net.json", state.net.to_dict())
    if state.stack is not None:
        write_json(run_dir / "stack.json", stack_to_dict(state.stack))

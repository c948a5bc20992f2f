"""One-vs-one multiclass layer with a simulated quantum frequency search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyClass
from .lssvm import KernelSpec, decision_value, train_classical
from .qsvm import EXACT_SPECTRAL, InversionMode, QuantumSVMModel, classify_binary, train_quantum_binary
from .statevector import EXACT, ShotPlan

DEFAULT_EPSILON = 0.01
DEFAULT_ITER_FACTOR = 3


@dataclass(frozen=True, eq=False)
class MulticlassSVMModel:
    g: int
    binaries: list
    m_max: int
    kernel: KernelSpec = field(default_factory=KernelSpec)
    eta: float = 1.0

    def __post_init__(self):
        if len(self.binaries) != self.g * (self.g - 1) // 2:
            raise ValueError("binary count must be g(g-1)/2")

    @property
    def pairs(self) -> list:
        return [m.class_pair for m in self.binaries]

    @property
    def quantum(self) -> bool:
        return bool(self.binaries) and isinstance(self.binaries[0], QuantumSVMModel)


@dataclass(frozen=True)
class VoteRecord:
    votes: tuple
    epsilon: float = DEFAULT_EPSILON
    freq: Optional[float] = None
    g: Optional[int] = None

    @property
    def n_classes(self) -> int:
        return self.g if self.g is not None else max(self.votes) + 1


def iteration_cap(g: int, factor: float = DEFAULT_ITER_FACTOR) -> int:
    """ceil(factor * log2 g), at least 1."""
    return max(1, math.ceil(factor * math.log2(max(g, 2))))


def train_multiclass(
    X,
    labels,
    kernel: KernelSpec,
    eta: float,
    eps_k: Optional[float] = None,
    mode: InversionMode = EXACT_SPECTRAL,
    g: Optional[int] = None,
    quantum: bool = True,
) -> MulticlassSVMModel:
    """One binary model per class pair (i < j); +1 means class i.

    ``quantum=False`` trains every node with the classical solver instead.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if g is None:
        g = int(labels.max()) + 1 if labels.size else 0
    if g < 2:
        raise EmptyClass("multiclass training needs at least two classes")
    counts = np.bincount(labels, minlength=g)
    if np.any(counts[:g] == 0) or counts.size > g:
        missing = [c for c in range(g) if c >= counts.size or counts[c] == 0]
        raise EmptyClass(f"classes without samples: {missing}")
    binaries = []
    m_max = 0
    for i, j in combinations(range(g), 2):
        mask = (labels == i) | (labels == j)
        sub = X[mask]
        y = np.where(labels[mask] == i, 1.0, -1.0)
        m_max = max(m_max, int(mask.sum()))
        if quantum:
            binaries.append(train_quantum_binary(sub, y, kernel, eta, eps_k, mode, class_pair=(i, j)))
        else:
            binaries.append(train_classical(sub, y, kernel, eta, class_pair=(i, j)))
    return MulticlassSVMModel(g=g, binaries=binaries, m_max=m_max, kernel=kernel, eta=float(eta))


def binary_label(model, x, plan: ShotPlan = EXACT, m_max: Optional[int] = None) -> int:
    """+1/-1 from one pairwise model, quantum or classical."""
    if isinstance(model, QuantumSVMModel):
        return classify_binary(model, x, plan, m_max)[0]
    return 1 if decision_value(model, x) > 0 else -1


def collect_votes(model: MulticlassSVMModel, x, plan: ShotPlan = EXACT) -> list:
    votes = []
    for binary in model.binaries:
        i, j = binary.class_pair
        votes.append(i if binary_label(binary, x, plan, model.m_max) == 1 else j)
    return votes


def majority_vote(votes: Sequence[int], g: int) -> int:
    """Exact argmax count; ties go to the lowest class index."""
    return int(np.argmax(np.bincount(np.asarray(votes, dtype=np.int64), minlength=g)))


def grover_frequency_search(
    votes,
    seed: int = 0,
    iter_cap: Optional[int] = None,
    epsilon: Optional[float] = None,
    g: Optional[int] = None,
) -> tuple[int, float]:
    """Simulated quantum search for the most frequent vote.

    Each round a Grover search over the count register marks the classes that
    beat the incumbent (more votes, or as many votes and a lower index) and
    measures one of them uniformly. Its frequency is then read with an error
    uniform in +-epsilon/(4g). The challenger replaces the incumbent when its
    estimate exceeds the incumbent's by more than epsilon/(2g); estimates
    closer than that are indistinguishable and the lower index is kept.
    Returns (class index, frequency read from the count register).
    """
    if isinstance(votes, VoteRecord):
        epsilon = votes.epsilon if epsilon is None else epsilon
        g = votes.g if g is None else g
        votes = votes.votes
    epsilon = DEFAULT_EPSILON if epsilon is None else float(epsilon)
    v = np.asarray(votes, dtype=np.int64).reshape(-1)
    if v.size == 0:
        raise ValueError("no votes")
    g = int(v.max()) + 1 if g is None else int(g)
    iter_cap = iteration_cap(g) if iter_cap is None else int(iter_cap)
    if iter_cap < 1:
        raise ValueError("iter_cap must be >= 1")
    n = v.size
    counts = np.bincount(v, minlength=g)
    freq = counts / n
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(g, n, *map(int, v))))
    noise = epsilon / (4.0 * g)
    threshold = epsilon / (2.0 * g)

    def estimate(c):
        return freq[c] + rng.uniform(-noise, noise)

    incumbent = int(v[rng.integers(n)])
    s = estimate(incumbent)
    for _ in range(iter_cap):
        marked = [
            c
            for c in range(g)
            if counts[c] > counts[incumbent] or (counts[c] == counts[incumbent] and c < incumbent)
        ]
        if not marked:
            break
        challenger = int(marked[rng.integers(len(marked))])
        s_new = estimate(challenger)
        if s_new > s + threshold or (abs(s_new - s) <= threshold and challenger < incumbent):
            incumbent, s = challenger, s_new
    # the count register holds an integer number of votes
    return incumbent, float(min(1.0, max(0.0, round(s * n) / n)))


def classify_all_pairs(
    model: MulticlassSVMModel,
    x,
    plan: ShotPlan = EXACT,
    oracle: bool = True,
    epsilon: float = DEFAULT_EPSILON,
    iter_factor: float = DEFAULT_ITER_FACTOR,
) -> int:
    votes = collect_votes(model, x, plan)
    if oracle:
        return majority_vote(votes, model.g)
    cls, _ = grover_frequency_search(
        votes,
        seed=plan.seed,
        iter_cap=iteration_cap(model.g, iter_factor),
        epsilon=epsilon,
        g=model.g,
    )
    return cls


def predict(model: MulticlassSVMModel, X, plan: ShotPlan = EXACT, oracle: bool = True) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.array([classify_all_pairs(model, x, plan, oracle) for x in X], dtype=np.int64)

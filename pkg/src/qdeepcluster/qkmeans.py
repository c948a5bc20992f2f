"""K-Means through swap-test distances and adiabatic cluster assignment.

``lloyd_classical`` is the oracle; ``qkmeans_run`` follows the same
seed-then-iterate schedule but obtains every distance from a swap test and
every assignment from an annealed cluster register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadSeeds
from .serialization import hexify
from .statevector import EXACT, ShotPlan, StateVec, encode_amplitudes, swap_test_probability

DEFAULT_T_ANNEAL = 50.0
DEFAULT_STEPS = 400
# spread that normalized distance rows are rescaled to
NORMALIZED_SPREAD = 5.0


@dataclass(frozen=True, eq=False)
class ClusterResult:
    K: int
    centroids: np.ndarray
    assignments: np.ndarray
    objective: float
    history: tuple = ()
    iterations: int = 0
    converged: bool = False

    @property
    def pseudo_labels(self) -> np.ndarray:
        """One-hot rows, one per point."""
        return np.eye(self.K, dtype=np.int64)[self.assignments]

    def to_dict(self, exact: bool = True) -> dict:
        enc = hexify if exact else (lambda a: np.asarray(a).tolist())
        return {
            "schema": 1,
            "K": self.K,
            "centroids": enc(self.centroids),
            "assignments": self.assignments.tolist(),
            "objective": self.objective,
            "history": list(self.history),
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True, eq=False)
class ClusterState:
    """|zeta> = M^{-1/2} sum_j |c_j>|j>, flattened as c * M + j."""

    zeta: StateVec
    copies: int = 1

    @property
    def K(self) -> int:
        return self.zeta.shape[0]

    @property
    def M(self) -> int:
        return self.zeta.shape[1]

    def point_marginal(self) -> np.ndarray:
        return self.zeta.probabilities.reshape(self.zeta.shape).sum(axis=0)

    def cluster_marginal(self) -> np.ndarray:
        return self.zeta.probabilities.reshape(self.zeta.shape).sum(axis=1)


def cluster_state(assignments, K: int, copies: int = 1) -> ClusterState:
    a = np.asarray(assignments, dtype=np.int64)
    m = a.size
    amps = np.zeros((K, m))
    amps[a, np.arange(m)] = 1.0 / np.sqrt(m)
    return ClusterState(StateVec(amps, shape=(K, m)), copies)


def kmeans_objective(features, centroids, assignments) -> float:
    """(1/M) sum_j |f_j - B c_j|^2."""
    f = np.asarray(features, dtype=np.float64)
    diff = f - np.asarray(centroids)[np.asarray(assignments)]
    return float(np.sum(diff * diff) / f.shape[0])


def _check_seeds(features, K, seeds) -> np.ndarray:
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1)
    m = features.shape[0]
    if not 1 <= K <= m:
        raise BadSeeds(f"need 1 <= K <= M, got K={K}, M={m}")
    if seeds.size != K:
        raise BadSeeds(f"expected {K} seed indices, got {seeds.size}")
    if np.unique(seeds).size != K:
        raise BadSeeds("seed indices must be distinct")
    if seeds.min() < 0 or seeds.max() >= m:
        raise BadSeeds("seed index out of range")
    return seeds


def means_with_repair(features, assignments, K: int):
    """Cluster means; an empty cluster takes the point farthest from its centroid.

    Returns (centroids, possibly-updated assignments).
    """
    f = np.asarray(features, dtype=np.float64)
    a = np.asarray(assignments, dtype=np.int64).copy()
    while True:
        counts = np.bincount(a, minlength=K)
        sums = np.zeros((K, f.shape[1]))
        np.add.at(sums, a, f)
        centroids = np.zeros_like(sums)
        nz = counts > 0
        centroids[nz] = sums[nz] / counts[nz, None]
        empty = np.flatnonzero(~nz)
        if empty.size == 0:
            return centroids, a
        dist = np.sum((f - centroids[a]) ** 2, axis=1)
        # a donor must leave a non-empty cluster behind
        dist[counts[a] <= 1] = -np.inf
        donor = int(np.argmax(dist))
        a[donor] = int(empty[0])


def _sq_dists(f, c) -> np.ndarray:
    return np.sum((f[:, None, :] - c[None, :, :]) ** 2, axis=2)


def lloyd_classical(features, K: int, seed_indices, max_iter: int = 100) -> ClusterResult:
    """Lloyd iterations from explicit seed points (ties go to the lowest index)."""
    f = np.asarray(features, dtype=np.float64)
    seeds = _check_seeds(f, K, seed_indices)
    assign = np.argmin(_sq_dists(f, f[seeds]), axis=1)
    centroids, assign = means_with_repair(f, assign, K)
    history = [kmeans_objective(f, centroids, assign)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = np.argmin(_sq_dists(f, centroids), axis=1)
        if np.array_equal(new, assign):
            converged = True
            it -= 1
            break
        centroids, assign = means_with_repair(f, new, K)
        history.append(kmeans_objective(f, centroids, assign))
    return ClusterResult(
        K=K,
        centroids=centroids,
        assignments=assign,
        objective=kmeans_objective(f, centroids, assign),
        history=tuple(history),
        iterations=it,
        converged=converged,
    )


def quantum_distance(x, y, plan: ShotPlan = EXACT, tag=()) -> float:
    """|x - y|^2 = |x|^2 + |y|^2 - 2|x||y| Re<x_hat|y_hat> via a swap test.

    Norms are classical; only the direction overlap is measured.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        return nx * nx + ny * ny
    sx, _ = encode_amplitudes(x)
    sy, _ = encode_amplitudes(y)
    p = swap_test_probability(sx, sy, plan, ("distance",) + tuple(tag))
    overlap = 1.0 - 2.0 * p
    return max(0.0, nx * nx + ny * ny - 2.0 * nx * ny * overlap)


def anneal_distribution(distances, t_anneal: float = DEFAULT_T_ANNEAL, steps: int = DEFAULT_STEPS,
                        normalize: bool = False) -> np.ndarray:
    """Cluster-register distribution after the sweep, for one row or a batch.

    ``normalize`` shifts each row to a zero minimum (a global phase) and
    rescales its spread to ``NORMALIZED_SPREAD``, so any row with a relative
    gap of 0.1 between its two smallest entries anneals like a raw row on
    [0, 5] with gap 0.5.
    """
    d = np.asarray(distances, dtype=np.float64)
    single = d.ndim == 1
    d = np.atleast_2d(d)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    if normalize:
        d = d - d.min(axis=1, keepdims=True)
        spread = d.max(axis=1, keepdims=True)
        d = np.divide(NORMALIZED_SPREAD * d, spread, out=np.zeros_like(d), where=spread > 0)
    if d.shape[1] == 1:
        probs = np.ones_like(d)
    else:
        probs = _kernels.anneal_probabilities(d, float(t_anneal), int(steps))
        probs /= probs.sum(axis=1, keepdims=True)
    return probs[0] if single else probs


def _readout(probs: np.ndarray, plan: ShotPlan, tags) -> np.ndarray:
    if not plan.sampled:
        return np.argmax(probs, axis=1)
    out = np.empty(probs.shape[0], dtype=np.int64)
    for b, tag in enumerate(tags):
        rng = plan.rng("anneal", *tag)
        out[b] = rng.choice(probs.shape[1], p=probs[b])
    return out


def adiabatic_assign(
    point_distances,
    t_anneal: float = DEFAULT_T_ANNEAL,
    steps: int = DEFAULT_STEPS,
    plan: ShotPlan = EXACT,
    normalize: bool = False,
    tag=(),
) -> int:
    """Anneal the cluster register and measure it.

    Exact mode reports the most probable outcome; sampled mode performs one
    projective measurement drawn from the final distribution.
    """
    probs = anneal_distribution(point_distances, t_anneal, steps, normalize)
    return int(_readout(probs[None, :], plan, [tuple(tag)])[0])


def _distance_matrix(f, centers, plan: ShotPlan, copies: int, iteration: int) -> np.ndarray:
    m, k = f.shape[0], centers.shape[0]
    if not plan.sampled:
        return np.array(
            [[quantum_distance(f[j], centers[c]) for c in range(k)] for j in range(m)]
        )
    dplan = plan.with_shots(plan.shots * copies)
    return np.array(
        [
            [quantum_distance(f[j], centers[c], dplan, (iteration, j, c)) for c in range(k)]
            for j in range(m)
        ]
    )


@dataclass(frozen=True)
class AnnealParams:
    t_anneal: float = DEFAULT_T_ANNEAL
    steps: int = DEFAULT_STEPS
    normalize: bool = True


def qkmeans_run(
    features,
    K: int,
    seed_indices,
    iters: int = 100,
    plan: ShotPlan = EXACT,
    anneal: AnnealParams = AnnealParams(),
    copies: int = 1,
) -> tuple[ClusterResult, ClusterState]:
    """Seeded quantum K-Means.

    Iteration 0 assigns every point to its closest seed; each later iteration
    recomputes cluster means from the current assignment, measures all
    point-to-mean distances and re-anneals every point. Stops at an
    assignment fixpoint or after ``iters`` reassignments.
    """
    f = np.asarray(features, dtype=np.float64)
    seeds = _check_seeds(f, K, seed_indices)
    m = f.shape[0]

    def assign_all(centers, iteration):
        dist = _distance_matrix(f, centers, plan, copies, iteration)
        probs = anneal_distribution(dist, anneal.t_anneal, anneal.steps, anneal.normalize)
        return _readout(probs, plan, [(iteration, j) for j in range(m)])

    assign = assign_all(f[seeds], 0)
    centroids, assign = means_with_repair(f, assign, K)
    history = [kmeans_objective(f, centroids, assign)]
    converged = False
    it = 0
    for it in range(1, iters + 1):
        new = assign_all(centroids, it)
        if np.array_equal(new, assign):
            converged = True
            it -= 1
            break
        centroids, assign = means_with_repair(f, new, K)
        history.append(kmeans_objective(f, centroids, assign))
    result = ClusterResult(
        K=K,
        centroids=centroids,
        assignments=assign,
        objective=kmeans_objective(f, centroids, assign),
        history=tuple(history),
        iterations=it,
        converged=converged,
    )
    return result, cluster_state(assign, K, copies)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qdeepcluster.datasets import make_blobs
from qdeepcluster.errors import BadSeeds
from qdeepcluster.qkmeans import (
    AnnealParams,
    adiabatic_assign,
    anneal_distribution,
    cluster_state,
    kmeans_objective,
    lloyd_classical,
    means_with_repair,
    qkmeans_run,
    quantum_distance,
)
from qdeepcluster.statevector import ShotPlan


def gapped_distances(rng, K, lo=0.0, hi=5.0, gap=0.5):
    while True:
        d = rng.uniform(lo, hi, K)
        s = np.sort(d)
        if s[1] - s[0] >= gap:
            return d


# Lloyd oracle

def test_lloyd_two_points():
    r = lloyd_classical([[0.0, 0.0], [10.0, 0.0]], 2, [0, 1])
    assert r.objective == 0.0
    assert sorted(r.assignments) == [0, 1]


def test_lloyd_square_corners():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    r = lloyd_classical(X, 2, [0, 1])
    assert list(r.assignments) == [0, 1, 0, 1]
    assert r.objective == pytest.approx(0.25)


def test_lloyd_single_cluster(rng):
    X = rng.normal(size=(15, 3))
    r = lloyd_classical(X, 1, [4])
    assert np.allclose(r.centroids[0], X.mean(axis=0))
    assert r.objective == pytest.approx(np.sum((X - X.mean(axis=0)) ** 2) / 15)


def test_bad_seeds(rng):
    X = rng.normal(size=(5, 2))
    for K, seeds in ((2, [0, 0]), (2, [0]), (2, [0, 7]), (6, range(6))):
        with pytest.raises(BadSeeds):
            lloyd_classical(X, K, list(seeds))
        with pytest.raises(BadSeeds):
            qkmeans_run(X, K, list(seeds))


def test_empty_cluster_repair():
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    centroids, a = means_with_repair(X, np.array([0, 0, 0, 0]), 2)
    assert np.bincount(a, minlength=2).min() >= 1
    assert a[3] == 1
    assert centroids[1, 0] == 10.0


# distances

def test_distance_examples():
    assert quantum_distance([1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.0, abs=1e-14)
    assert quantum_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0, abs=1e-14)
    assert quantum_distance([1.0, 0.0], [0.6, 0.8]) == pytest.approx(0.8, abs=1e-14)
    assert quantum_distance([0.0, 0.0], [3.0, 4.0]) == 25.0


@given(
    st.integers(1, 8).flatmap(
        lambda n: st.tuples(
            arrays(np.float64, n, elements=st.floats(-10, 10)),
            arrays(np.float64, n, elements=st.floats(-10, 10)),
        )
    )
)
def test_distance_property(pair):
    x, y = pair
    assert quantum_distance(x, y) == pytest.approx(float(np.sum((x - y) ** 2)), abs=1e-10)


def test_distance_sampled_converges():
    x, y = np.array([1.0, 2.0, -0.5]), np.array([0.3, -1.0, 2.0])
    exact = float(np.sum((x - y) ** 2))
    for shots in (10 ** 4, 10 ** 6):
        est = quantum_distance(x, y, ShotPlan(shots=shots, seed=2, mode="sampled"))
        scale = 2 * np.linalg.norm(x) * np.linalg.norm(y) * 2
        assert abs(est - exact) <= 5 * scale / math.sqrt(shots)


# adiabatic assignment

def test_anneal_two_level_example():
    p = anneal_distribution([0.1, 5.0], 50, 400)
    assert p[0] >= 0.99
    assert adiabatic_assign([0.1, 5.0]) == 0


def test_anneal_equal_distances_uniform():
    for K in (2, 3, 5):
        assert np.allclose(anneal_distribution(np.full(K, 1.7), 50, 400), 1.0 / K, atol=1e-12)


def test_anneal_single_cluster():
    assert adiabatic_assign([3.0]) == 0
    assert adiabatic_assign([3.0], plan=ShotPlan(seed=1, mode="sampled")) == 0


def test_anneal_gapped_success():
    rng = np.random.default_rng(0)
    for _ in range(300):
        d = gapped_distances(rng, int(rng.integers(2, 5)))
        assert anneal_distribution(d, 50, 400)[np.argmin(d)] >= 0.99


def test_anneal_normalized_large_spread():
    rng = np.random.default_rng(1)
    for _ in range(100):
        K = int(rng.integers(2, 6))
        while True:
            d = rng.uniform(0.0, 500.0, K)
            s = np.sort(d)
            if s[1] - s[0] >= 0.1 * (s[-1] - s[0]):
                break
        assert anneal_distribution(d, 50, 400, normalize=True)[np.argmin(d)] >= 0.99


def test_anneal_normalized_shift_scale_invariant(rng):
    d = rng.uniform(0, 3, 4)
    base = anneal_distribution(d, 50, 400, normalize=True)
    assert np.allclose(anneal_distribution(7.5 * d + 2.0, 50, 400, normalize=True), base, atol=1e-12)


def test_anneal_success_grows_with_time_two_level():
    p = [anneal_distribution([0.1, 5.0], T, 100 * T)[0] for T in (2, 4, 8, 16, 32)]
    assert all(a < b for a, b in zip(p, p[1:]))


def test_anneal_success_trend_random():
    """Success rises with T up to small finite-time oscillations (< 0.005)."""
    rng = np.random.default_rng(0)
    for _ in range(40):
        d = gapped_distances(rng, int(rng.integers(2, 5)))
        p = [anneal_distribution(d, T, 100 * T)[np.argmin(d)] for T in (5, 10, 20, 50)]
        assert p[-1] > p[0]
        assert max(a - b for a, b in zip(p, p[1:])) < 5e-3


def test_anneal_sampled_is_single_shot():
    d = [0.5, 0.9, 2.0]
    probs = anneal_distribution(d, 3, 100)
    draws = [adiabatic_assign(d, 3, 100, ShotPlan(seed=s, mode="sampled")) for s in range(3000)]
    freq = np.bincount(draws, minlength=3) / 3000
    assert np.allclose(freq, probs, atol=0.03)


def test_anneal_rejects_negative():
    with pytest.raises(ValueError):
        anneal_distribution([-1.0, 2.0])


# full runs

def test_qkmeans_matches_lloyd_on_blobs():
    for seed in range(20):
        X, _ = make_blobs(3, 20, 8, 1.0, 6.0, seed=100 + seed)
        rng = np.random.default_rng(seed)
        seeds = rng.choice(len(X), 3, replace=False)
        q, _ = qkmeans_run(X, 3, seeds)
        c = lloyd_classical(X, 3, seeds)
        assert np.array_equal(q.assignments, c.assignments)
        assert q.objective == pytest.approx(c.objective, abs=1e-9)
        assert all(b <= a + 1e-12 for a, b in zip(q.history, q.history[1:]))


def test_qkmeans_single_cluster(rng):
    X = rng.normal(size=(10, 2))
    r, state = qkmeans_run(X, 1, [3])
    assert np.all(r.assignments == 0)
    assert np.allclose(state.zeta.amplitudes, 1 / math.sqrt(10))


def test_cluster_state_invariants(rng):
    a = rng.integers(0, 4, 25)
    s = cluster_state(a, 4)
    amps = s.zeta.amplitudes.reshape(4, 25)
    nz = amps[amps != 0]
    assert np.allclose(nz, 1 / 5) and nz.size == 25
    assert np.allclose(s.point_marginal(), 1 / 25)
    assert np.allclose(s.cluster_marginal(), np.bincount(a, minlength=4) / 25)


def test_result_invariants(blobs3):
    X, _ = blobs3
    r, _ = qkmeans_run(X, 3, [0, 20, 40])
    assert np.all(r.pseudo_labels.sum(axis=1) == 1)
    assert r.objective == pytest.approx(kmeans_objective(X, r.centroids, r.assignments), abs=1e-9)
    d = r.to_dict()
    assert d["schema"] == 1 and len(d["assignments"]) == 60


def test_qkmeans_sampled_deterministic(blobs3):
    X, _ = blobs3
    plan = ShotPlan(shots=4000, seed=3, mode="sampled")
    a, _ = qkmeans_run(X, 3, [0, 20, 40], plan=plan, copies=2)
    b, _ = qkmeans_run(X, 3, [0, 20, 40], plan=plan, copies=2)
    assert np.array_equal(a.assignments, b.assignments)
    c = lloyd_classical(X, 3, [0, 20, 40])
    assert np.mean(a.assignments == c.assignments) >= 0.95


def test_raw_anneal_option(blobs3):
    X, _ = blobs3
    scaled = X / 10.0
    r, _ = qkmeans_run(scaled, 3, [0, 20, 40], anneal=AnnealParams(normalize=False))
    c = lloyd_classical(scaled, 3, [0, 20, 40])
    assert np.array_equal(r.assignments, c.assignments)

from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdeepcluster.allpair import (
    VoteRecord,
    classify_all_pairs,
    collect_votes,
    grover_frequency_search,
    iteration_cap,
    majority_vote,
    predict,
    train_multiclass,
)
from qdeepcluster.datasets import make_blobs
from qdeepcluster.errors import EmptyClass
from qdeepcluster.lssvm import KernelSpec, decision_value, train_classical
from qdeepcluster.qsvm import classify_binary


@pytest.fixture(scope="module")
def blob_model():
    X, y = make_blobs(3, 20, 4, 1.0, 6.0, seed=11)
    return X, y, train_multiclass(X, y, KernelSpec(), 1.0)


def test_pair_counts():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(12, 2))
    y = np.repeat(np.arange(4), 3)
    m = train_multiclass(X, y, KernelSpec(), 1.0)
    assert len(m.binaries) == 6
    assert m.pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert m.m_max == 6


def test_empty_class():
    X = np.zeros((4, 2)) + np.arange(4)[:, None]
    with pytest.raises(EmptyClass):
        train_multiclass(X, [0, 0, 2, 2], KernelSpec(), 1.0, g=3)
    with pytest.raises(EmptyClass):
        train_multiclass(X, [0, 0, 0, 0], KernelSpec(), 1.0)


def test_two_class_degenerates_to_binary():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(size=(5, 2)) + 3, rng.normal(size=(5, 2)) - 3])
    y = np.repeat([0, 1], 5)
    m = train_multiclass(X, y, KernelSpec(), 1.0)
    for x in rng.normal(size=(30, 2)) * 3:
        label, _ = classify_binary(m.binaries[0], x, m_max=m.m_max)
        assert classify_all_pairs(m, x) == (0 if label == 1 else 1)
        assert classify_all_pairs(m, x, oracle=False) == (0 if label == 1 else 1)


def test_pairwise_models_separate_blobs(blob_model):
    X, y, m = blob_model
    for binary in m.binaries:
        i, j = binary.class_pair
        mask = (y == i) | (y == j)
        classical = train_classical(X[mask], np.where(y[mask] == i, 1.0, -1.0), KernelSpec(), 1.0)
        truth = np.where(y[mask] == i, 1, -1)
        pred = np.array([classify_binary(binary, x, m_max=m.m_max)[0] for x in X[mask]])
        assert np.mean(pred == truth) >= 0.95
        assert np.mean(np.sign(decision_value(classical, X[mask])) == truth) >= 0.95


def test_grover_examples():
    assert grover_frequency_search([2, 2, 2], g=3) == (2, 1.0)
    assert grover_frequency_search(VoteRecord((1, 1, 2), epsilon=0.01, g=3))[0] == 1
    assert grover_frequency_search([0, 1, 2], g=3)[0] == 0


def test_grover_exhaustive_g3():
    for votes in product(range(3), repeat=3):
        counts = np.bincount(votes, minlength=3)
        expected = majority_vote(votes, 3)
        for seed in range(10):
            cls, freq = grover_frequency_search(votes, seed=seed, g=3)
            assert cls == expected
            assert freq == counts[expected] / 3


@given(st.lists(st.integers(0, 5), min_size=1, max_size=15), st.integers(0, 2 ** 31))
def test_grover_matches_majority_with_ties_to_lowest(votes, seed):
    g = 6
    assert grover_frequency_search(votes, seed=seed, g=g)[0] == majority_vote(votes, g)


def test_grover_deterministic():
    votes = [3, 1, 1, 0, 3, 2]
    assert grover_frequency_search(votes, seed=5, g=4) == grover_frequency_search(votes, seed=5, g=4)


def test_iteration_cap():
    assert iteration_cap(2) == 3
    assert iteration_cap(3) == 5
    assert iteration_cap(8) == 9
    assert iteration_cap(4, factor=1) == 2


def test_oracle_and_grover_paths_agree(blob_model):
    X, y, m = blob_model
    rng = np.random.default_rng(3)
    centers = np.array([X[y == c].mean(axis=0) for c in range(3)])
    test = centers[rng.integers(0, 3, 200)] + rng.normal(size=(200, X.shape[1]))
    a = predict(m, test, oracle=True)
    b = predict(m, test, oracle=False)
    assert np.array_equal(a, b)


def test_strict_majority_is_returned(blob_model):
    X, y, m = blob_model
    for x in X[:10]:
        votes = collect_votes(m, x)
        counts = np.bincount(votes, minlength=3)
        top = np.sort(counts)[::-1]
        if top[0] > top[1]:
            assert classify_all_pairs(m, x) == int(np.argmax(counts))


def test_relabeling_equivariance(blob_model):
    X, y, m = blob_model
    perm = np.array([2, 0, 1])
    m2 = train_multiclass(X, perm[y], KernelSpec(), 1.0)
    for x in X[::4]:
        assert classify_all_pairs(m2, x) == perm[classify_all_pairs(m, x)]

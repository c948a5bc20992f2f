"""Clustering quality against ground truth: purity, NMI, matched accuracy."""

from __future__ import annotations

from itertools import permutations

import numpy as np

EXHAUSTIVE_MAX_K = 6


def contingency(pred, truth) -> np.ndarray:
    """Counts table, rows are predicted clusters and columns true classes."""
    p = np.asarray(pred, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape:
        raise ValueError("prediction and truth lengths differ")
    _, pi = np.unique(p, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    table = np.zeros((pi.max(initial=-1) + 1, ti.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def purity(pred, truth) -> float:
    table = contingency(pred, truth)
    if table.size == 0:
        return 1.0
    return float(table.max(axis=1).sum() / table.sum())


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies."""
    table = contingency(pred, truth).astype(np.float64)
    n = table.sum()
    if n == 0:
        return 1.0
    hp = _entropy(table.sum(axis=1))
    ht = _entropy(table.sum(axis=0))
    if hp == 0.0 and ht == 0.0:
        return 1.0
    if hp == 0.0 or ht == 0.0:
        return 0.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / outer[nz])))
    return max(0.0, min(1.0, mi / (0.5 * (hp + ht))))


def best_matching(pred, truth, K: int | None = None) -> dict:
    """Map predicted cluster ids to ids of ``truth`` maximizing agreement.

    Exhaustive over permutations up to ``EXHAUSTIVE_MAX_K`` labels, greedy on
    the largest remaining overlap above that.
    """
    p = np.asarray(pred, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    labels_p = np.unique(p)
    labels_t = np.unique(t)
    n = max(labels_p.size, labels_t.size, K or 0)
    overlap = np.zeros((n, n), dtype=np.int64)
    for a, lp in enumerate(labels_p):
        for b, lt in enumerate(labels_t):
            overlap[a, b] = int(np.sum((p == lp) & (t == lt)))
    if n <= EXHAUSTIVE_MAX_K:
        best, best_score = None, -1
        for perm in permutations(range(n)):
            score = sum(overlap[a, perm[a]] for a in range(n))
            if score > best_score:
                best, best_score = perm, score
        assign = best
    else:
        assign = [-1] * n
        work = overlap.astype(np.float64)
        for _ in range(n):
            a, b = np.unravel_index(np.argmax(work), work.shape)
            assign[a] = b
            work[a, :] = -1
            work[:, b] = -1
    mapping = {}
    for a, lp in enumerate(labels_p):
        b = assign[a]
        mapping[int(lp)] = int(labels_t[b]) if b < labels_t.size else -1 - b
    return mapping


def matched_accuracy(pred, truth) -> float:
    p = np.asarray(pred, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.size == 0:
        return 1.0
    m = best_matching(p, t)
    return float(np.mean(np.array([m[int(v)] for v in p]) == t))


def churn(prev, cur) -> float:
    """Fraction of points whose label changed, after matching ``cur`` onto ``prev``."""
    if prev is None:
        return 1.0
    a = np.asarray(prev, dtype=np.int64)
    b = np.asarray(cur, dtype=np.int64)
    if a.size == 0:
        return 0.0
    m = best_matching(b, a)
    return float(np.mean(np.array([m[int(v)] for v in b]) != a))

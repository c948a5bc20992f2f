"""Synthetic Gaussian blobs and the dataset CSV format."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigError


def blob_centers(K: int, dim: int, min_dist: float, rng: np.random.Generator,
                 max_tries: int = 10000) -> np.ndarray:
    """Rejection-sample K centers in a cube with pairwise distance >= ``min_dist``.

    The cube grows by 10% after every ``max_tries`` rejected candidates.
    """
    half = max(min_dist, 1.0) * max(1.0, K ** (1.0 / dim))
    centers = []
    tries = 0
    while len(centers) < K:
        c = rng.uniform(-half, half, size=dim)
        if all(np.linalg.norm(c - o) >= min_dist for o in centers):
            centers.append(c)
        tries += 1
        if tries >= max_tries:
            half *= 1.1
            tries = 0
    return np.array(centers)


def make_blobs(K: int = 3, per_blob: int = 20, dim: int = 8, std: float = 1.0,
               separation: float = 6.0, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(X, labels) with blob ``k`` occupying rows ``k*per_blob .. (k+1)*per_blob - 1``."""
    if K < 1 or per_blob < 1 or dim < 1:
        raise ConfigError("K, per_blob and dim must be positive")
    if not std > 0 or separation < 0:
        raise ConfigError("std must be positive and separation non-negative")
    rng = np.random.default_rng(seed)
    centers = blob_centers(K, dim, separation * std, rng)
    X = np.concatenate([c + std * rng.standard_normal((per_blob, dim)) for c in centers])
    labels = np.repeat(np.arange(K), per_blob)
    return X, labels


def write_dataset(path, X, labels=None) -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [f"f{i}" for i in range(X.shape[1])]
        if labels is not None:
            header.append("label")
        w.writerow(header)
        for i, row in enumerate(X):
            vals = [repr(float(v)) for v in row]
            if labels is not None:
                vals.append(str(int(labels[i])))
            w.writerow(vals)


def read_dataset(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Feature columns then an optional integer ``label`` column; header required."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty dataset file")
    header, body = rows[0], rows[1:]
    if not body:
        raise ConfigError(f"{path}: no data rows")
    has_label = header[-1] == "label"
    n_feat = len(header) - int(has_label)
    try:
        X = np.array([[float(v) for v in r[:n_feat]] for r in body])
        labels = np.array([int(r[n_feat]) for r in body]) if has_label else None
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed row ({exc})") from None
    if any(len(r) != len(header) for r in body):
        raise ConfigError(f"{path}: ragged rows")
    return X, labels

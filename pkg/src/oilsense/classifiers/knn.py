"""Brute-force Euclidean k-nearest-neighbors."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .base import TrainedModel, check_training_data


def train_knn(x, y, k=5, seed=0) -> TrainedModel:
    x, y, n_classes = check_training_data(x, y)
    if not 1 <= k <= x.shape[0]:
        raise DomainError(f"k must lie in [1, {x.shape[0]}], got {k}")
    return TrainedModel(
        "knn", {"x": x.copy(), "y": y.copy()}, n_classes, x.shape[1],
        {"k": int(k), "seed": int(seed)},
    )


def neighbors(train_x, query, k, chunk=512):
    """Indices of the k nearest training rows per query, nearest first.

    Equal distances resolve to the lower training index.
    """
    train_x = np.asarray(train_x, float)
    query = np.asarray(query, float)
    sq_train = np.einsum("ij,ij->i", train_x, train_x)
    out = np.empty((len(query), k), dtype=np.int64)
    for start in range(0, len(query), chunk):
        q = query[start:start + chunk]
        # Expanded form is fast but not exact, so it only shortlists;
        # candidates are re-ranked on exact distances below.
        approx = sq_train[None, :] - 2.0 * q @ train_x.T
        m = min(train_x.shape[0], k + 8)
        shortlist = np.argpartition(approx, m - 1, axis=1)[:, :m]
        for r in range(len(q)):
            d_short = approx[r, shortlist[r]]
            kth = np.sort(d_short)[k - 1]
            # every row within rounding of the k-th shortlist distance
            slack = 1e-9 * (abs(kth) + sq_train.max() + 1.0)
            cand = np.flatnonzero(approx[r] <= kth + slack)
            exact = np.sum((train_x[cand] - q[r]) ** 2, axis=1)
            order = np.lexsort((cand, exact))
            out[start + r] = cand[order[:k]]
    return out


def naive_neighbors(train_x, q, k):
    """Reference O(n) scan for a single query."""
    d = [(float(np.sum((row - q) ** 2)), i) for i, row in enumerate(np.asarray(train_x, float))]
    d.sort()
    return [i for _, i in d[:k]]


def score(model: TrainedModel, x) -> np.ndarray:
    k = model.manifest["k"]
    idx = neighbors(model.params["x"], x, k)
    votes = model.params["y"][idx]
    counts = np.zeros((len(x), model.class_count))
    for c in range(model.class_count):
        counts[:, c] = np.sum(votes == c, axis=1)
    return counts / k

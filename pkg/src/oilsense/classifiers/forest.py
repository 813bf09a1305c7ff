"""Random forest of CART trees (Gini impurity), compiled with numba."""

from __future__ import annotations

import math

import numba
import numpy as np

from ..errors import DomainError
from .base import TrainedModel, check_training_data


def gini(labels, n_classes=None) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return 0.0
    counts = np.bincount(labels, minlength=n_classes or 0)
    p = counts / labels.size
    return float(1.0 - np.sum(p * p))


@numba.njit(cache=True)
def _gini_from_counts(counts, total):
    if total == 0:
        return 0.0
    s = 0.0
    for c in range(counts.shape[0]):
        p = counts[c] / total
        s += p * p
    return 1.0 - s


@numba.njit(cache=True)
def _best_split(x, y, idx, features, n_classes, min_leaf):
    """Best (feature, threshold, weighted gini) over the given features.

    Thresholds are midpoints between consecutive distinct sorted values.
    Returns feature -1 when no split leaves ``min_leaf`` rows on both sides.
    """
    n = idx.shape[0]
    best_f = -1
    best_t = 0.0
    best_g = np.inf
    left = np.zeros(n_classes)
    total = np.zeros(n_classes)
    for r in range(n):
        total[y[idx[r]]] += 1.0
    values = np.empty(n)
    for fi in range(features.shape[0]):
        f = features[fi]
        for r in range(n):
            values[r] = x[idx[r], f]
        order = np.argsort(values, kind="mergesort")
        left[:] = 0.0
        for r in range(n - 1):
            row = idx[order[r]]
            left[y[row]] += 1.0
            v = values[order[r]]
            v_next = values[order[r + 1]]
            if v_next <= v:
                continue
            n_left = r + 1
            n_right = n - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            g_left = _gini_from_counts(left, n_left)
            g_right = _gini_from_counts(total - left, n_right)
            g = (n_left * g_left + n_right * g_right) / n
            if g < best_g:
                best_g = g
                best_f = f
                best_t = 0.5 * (v + v_next)
                # the midpoint can round onto v_next for adjacent floats
                if best_t >= v_next:
                    best_t = v
    return best_f, best_t, best_g


@numba.njit(cache=True)
def _grow_tree(x, y, sample, n_classes, max_depth, min_leaf, n_split_features, seed):
    np.random.seed(seed)
    d = x.shape[1]
    cap = 2 * sample.shape[0] + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left_child = np.full(cap, -1, dtype=np.int64)
    right_child = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))

    # explicit stack of (node id, start, stop, depth) over a shared index buffer
    buf = sample.copy()
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = buf.shape[0]
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    pool = np.arange(d)
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        stop = stack[top, 2]
        depth = stack[top, 3]
        idx = buf[start:stop]
        n = stop - start
        for r in range(n):
            value[node, y[idx[r]]] += 1.0
        pure = False
        for c in range(n_classes):
            if value[node, c] == n:
                pure = True
        if pure or depth >= max_depth or n < 2 * min_leaf:
            continue
        # partial Fisher-Yates draw of features without replacement
        for a in range(n_split_features):
            b = a + int(np.random.random() * (d - a))
            tmp = pool[a]
            pool[a] = pool[b]
            pool[b] = tmp
        chosen = np.sort(pool[:n_split_features].copy())
        f, t, g = _best_split(x, y, idx, chosen, n_classes, min_leaf)
        if f < 0:
            continue
        # stable partition of idx into <= t and > t
        tmp_idx = idx.copy()
        nl = 0
        for r in range(n):
            if x[tmp_idx[r], f] <= t:
                buf[start + nl] = tmp_idx[r]
                nl += 1
        nr = nl
        for r in range(n):
            if x[tmp_idx[r], f] > t:
                buf[start + nr] = tmp_idx[r]
                nr += 1
        feature[node] = f
        threshold[node] = t
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left_child[node] = lc
        right_child[node] = rc
        # push right first so the left subtree is numbered first
        stack[top, 0] = rc
        stack[top, 1] = start + nl
        stack[top, 2] = stop
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lc
        stack[top, 1] = start
        stack[top, 2] = start + nl
        stack[top, 3] = depth + 1
        top += 1
    return (feature[:n_nodes], threshold[:n_nodes], left_child[:n_nodes],
            right_child[:n_nodes], value[:n_nodes])


@numba.njit(cache=True)
def _forest_proba(x, feature, threshold, left, right, value, roots, n_classes):
    out = np.zeros((x.shape[0], n_classes))
    n_trees = roots.shape[0]
    for i in range(x.shape[0]):
        for t in range(n_trees):
            node = roots[t]
            while feature[node] >= 0:
                if x[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            total = 0.0
            for c in range(n_classes):
                total += value[node, c]
            for c in range(n_classes):
                out[i, c] += value[node, c] / total
        for c in range(n_classes):
            out[i, c] /= n_trees
    return out


def best_split(x, y, features=None, n_classes=None, min_leaf=1):
    """Python entry to the node splitter: (feature, threshold, weighted_gini)."""
    x = np.ascontiguousarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if features is None:
        features = np.arange(x.shape[1])
    n_classes = n_classes or int(y.max()) + 1
    f, t, g = _best_split(x, y, np.arange(len(y)), np.asarray(features, np.int64), n_classes, min_leaf)
    return int(f), float(t), float(g)


def train_forest(
    x, y, n_trees=100, max_depth=20, min_leaf=1, features_per_split=None,
    seed=0, bootstrap=True,
) -> TrainedModel:
    x, y, k = check_training_data(x, y)
    if n_trees < 1:
        raise DomainError("n_trees must be >= 1")
    if max_depth is not None and max_depth < 1:
        raise DomainError("max_depth must be >= 1 or None")
    if min_leaf < 1:
        raise DomainError("min_leaf must be >= 1")
    d = x.shape[1]
    m = features_per_split or math.ceil(math.sqrt(d))
    if not 1 <= m <= d:
        raise DomainError(f"features_per_split must lie in [1, {d}], got {m}")
    depth_cap = np.iinfo(np.int64).max if max_depth is None else int(max_depth)

    x = np.ascontiguousarray(x)
    n = x.shape[0]
    parts = {"feature": [], "threshold": [], "left": [], "right": [], "value": []}
    roots = []
    offset = 0
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        sample = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        tree_seed = int(rng.integers(0, 2**31 - 1))
        f, t, lc, rc, v = _grow_tree(x, y, sample.astype(np.int64), k, depth_cap, min_leaf, m, tree_seed)
        roots.append(offset)
        parts["feature"].append(f)
        parts["threshold"].append(t)
        parts["left"].append(np.where(lc >= 0, lc + offset, -1))
        parts["right"].append(np.where(rc >= 0, rc + offset, -1))
        parts["value"].append(v)
        offset += len(f)
    params = {name: np.concatenate(arrs) for name, arrs in parts.items()}
    params["roots"] = np.asarray(roots, dtype=np.int64)
    manifest = {
        "n_trees": int(n_trees),
        "max_depth": None if max_depth is None else int(max_depth),
        "min_leaf": int(min_leaf),
        "features_per_split": int(m),
        "bootstrap": bool(bootstrap),
        "seed": int(seed),
        "n_nodes": int(offset),
    }
    return TrainedModel("forest", params, k, d, manifest)


def score(model: TrainedModel, x) -> np.ndarray:
    p = model.params
    return _forest_proba(
        np.ascontiguousarray(x, dtype=float), p["feature"], p["threshold"],
        p["left"], p["right"], p["value"], p["roots"], model.class_count,
    )

"""One-vs-rest soft-margin SVMs trained by sequential minimal optimization."""

from __future__ import annotations

import numba
import numpy as np

from ..errors import DomainError
from .base import TrainedModel, check_training_data

LINEAR, RBF = 0, 1
_KERNELS = {"linear": LINEAR, "rbf": RBF}


@numba.njit(cache=True)
def _kernel_row(x, i, kernel, gamma, out):
    n, d = x.shape
    for r in range(n):
        s = 0.0
        if kernel == LINEAR:
            for c in range(d):
                s += x[r, c] * x[i, c]
            out[r] = s
        else:
            for c in range(d):
                diff = x[r, c] - x[i, c]
                s += diff * diff
            out[r] = np.exp(-gamma * s)


@numba.njit(cache=True)
def _cached_row(x, r, kernel, gamma, cache, slot_row, row_slot, last_used, clock):
    s = row_slot[r]
    if s < 0:
        s = np.argmin(last_used)
        old = slot_row[s]
        if old >= 0:
            row_slot[old] = -1
        _kernel_row(x, r, kernel, gamma, cache[s])
        slot_row[s] = r
        row_slot[r] = s
    last_used[s] = clock
    return cache[s]


@numba.njit(cache=True)
def _smo(x, y, c_penalty, kernel, gamma, tol, max_iter, cache_rows):
    """SMO on the dual with maximal-violating-pair selection.

    The first index maximizes the KKT violation; the second is chosen by
    the second-order gain among indices violating against it. Stops when
    the violation gap falls below ``tol``. Kernel rows go through an LRU
    cache of ``cache_rows`` rows. Returns (alpha, b, iterations, converged).
    """
    n = x.shape[0]
    alpha = np.zeros(n)
    grad = np.full(n, -1.0)  # gradient of 0.5 a'Qa - e'a, Q_ij = y_i y_j K_ij
    diag = np.empty(n)
    for r in range(n):
        if kernel == LINEAR:
            acc = 0.0
            for c in range(x.shape[1]):
                acc += x[r, c] * x[r, c]
            diag[r] = acc
        else:
            diag[r] = 1.0
    slots = max(2, min(n, cache_rows))
    cache = np.empty((slots, n))
    slot_row = np.full(slots, -1, dtype=np.int64)
    row_slot = np.full(n, -1, dtype=np.int64)
    last_used = np.full(slots, -1, dtype=np.int64)
    tau = 1e-12
    converged = False
    it = 0
    while it < max_iter:
        # first index: largest -y G over the "can move up" set
        g_max = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < c_penalty) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v > g_max:
                    g_max = v
                    i = t
        if i < 0:
            converged = True
            break
        ki = _cached_row(x, i, kernel, gamma, cache, slot_row, row_slot, last_used, 2 * it)
        g_max2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < c_penalty):
                yg = y[t] * grad[t]
                if yg > g_max2:
                    g_max2 = yg
                diff = g_max + yg
                if diff > 0:
                    a = diag[i] + diag[t] - 2.0 * ki[t]
                    if a <= 0:
                        a = tau
                    obj = -(diff * diff) / a
                    if obj < obj_min:
                        obj_min = obj
                        j = t
        if g_max + g_max2 < tol or j < 0:
            converged = True
            break
        kj = _cached_row(x, j, kernel, gamma, cache, slot_row, row_slot, last_used, 2 * it + 1)
        # row i may have been evicted by row j only when slots < 2
        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = diag[i] + diag[j] - 2.0 * ki[j]
        if quad <= 0:
            quad = tau
        C = c_penalty
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            d = ai_old - aj_old
            ai = ai_old + delta
            aj = aj_old + delta
            if d > 0:
                if aj < 0:
                    aj = 0.0
                    ai = d
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -d
            if d > 0:
                if ai > C:
                    ai = C
                    aj = C - d
            else:
                if aj > C:
                    aj = C
                    ai = C + d
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai = ai_old - delta
            aj = aj_old + delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total
        dai = ai - ai_old
        daj = aj - aj_old
        for t in range(n):
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj)
        alpha[i] = ai
        alpha[j] = aj
        it += 1

    # offset from free vectors, else the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    s = 0.0
    n_free = 0
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] >= c_penalty:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            s += yg
            n_free += 1
    rho = s / n_free if n_free > 0 else 0.5 * (ub + lb)
    return alpha, -rho, it, converged


@numba.njit(cache=True)
def _decision(query, sv, coef, b, kernel, gamma):
    out = np.empty(query.shape[0])
    d = query.shape[1]
    for q in range(query.shape[0]):
        s = b
        for r in range(sv.shape[0]):
            acc = 0.0
            if kernel == LINEAR:
                for c in range(d):
                    acc += sv[r, c] * query[q, c]
            else:
                for c in range(d):
                    diff = sv[r, c] - query[q, c]
                    acc += diff * diff
                acc = np.exp(-gamma * acc)
            s += coef[r] * acc
        out[q] = s
    return out


def default_gamma(x) -> float:
    x = np.asarray(x, float)
    return 1.0 / (x.shape[1] * float(np.mean(x.var(axis=0))))


def fit_binary(x, y_pm, c_penalty=1.0, kernel="rbf", gamma=None, tolerance=1e-3,
               max_passes=10, cache_mb=400):
    """Binary SMO on labels in {-1, +1}.

    At most ``max_passes * n`` pair updates. Returns (alpha, b, iterations, converged).
    """
    x = np.ascontiguousarray(x, dtype=float)
    y_pm = np.asarray(y_pm, dtype=float)
    g = default_gamma(x) if gamma is None else float(gamma)
    n = x.shape[0]
    cache_rows = int(cache_mb * 1e6 // (8 * max(n, 1)))
    return _smo(x, y_pm, float(c_penalty), _KERNELS[kernel], g, float(tolerance),
                int(max_passes) * n, cache_rows)


def decision_function(x_query, x_train, alpha, y_pm, b, kernel="rbf", gamma=1.0):
    sv = alpha > 0
    return _decision(np.ascontiguousarray(x_query, float), np.ascontiguousarray(x_train[sv]),
                     alpha[sv] * y_pm[sv], float(b), _KERNELS[kernel], float(gamma))


def train_svm(x, y, c_penalty=1.0, kernel="rbf", gamma=None, tolerance=1e-3,
              max_passes=10, seed=0) -> TrainedModel:
    """One binary machine per class (class vs rest).

    Running out of pair updates is not fatal: it is recorded per class in
    the manifest as a convergence warning. The solver is deterministic, so
    ``seed`` is only recorded.
    """
    x, y, k = check_training_data(x, y)
    if not c_penalty > 0:
        raise DomainError("c_penalty must be positive")
    if kernel not in _KERNELS:
        raise DomainError(f"kernel must be one of {sorted(_KERNELS)}, got {kernel!r}")
    if gamma is None:
        gamma = default_gamma(x)
    if kernel == "rbf" and not gamma > 0:
        raise DomainError("gamma must be positive for the rbf kernel")
    if max_passes < 1:
        raise DomainError("max_passes must be >= 1")

    x = np.ascontiguousarray(x)
    alphas, biases, iterations, warnings = [], [], [], []
    for c in range(k):
        y_pm = np.where(y == c, 1.0, -1.0)
        a, b, n_iter, converged = fit_binary(x, y_pm, c_penalty, kernel, gamma, tolerance, max_passes)
        alphas.append(a)
        biases.append(b)
        iterations.append(int(n_iter))
        if not converged:
            warnings.append(
                f"class {c}: KKT gap still above {tolerance:g} after {n_iter} pair updates "
                f"({max_passes} passes)")

    alpha = np.vstack(alphas)
    used = np.any(alpha > 0, axis=0)
    params = {
        "support_x": x[used],
        "alpha": alpha[:, used],
        "y_pm": np.vstack([np.where(y[used] == c, 1.0, -1.0) for c in range(k)]),
        "bias": np.asarray(biases),
    }
    manifest = {
        "c_penalty": float(c_penalty),
        "kernel": kernel,
        "gamma": float(gamma),
        "tolerance": float(tolerance),
        "max_passes": int(max_passes),
        "seed": int(seed),
        "training_rows": int(x.shape[0]),
        "support_vectors": int(used.sum()),
        "iterations": iterations,
        "convergence_warnings": warnings,
    }
    return TrainedModel("svm", params, k, x.shape[1], manifest)


def score(model: TrainedModel, x) -> np.ndarray:
    p = model.params
    kernel = model.manifest["kernel"]
    gamma = model.manifest["gamma"]
    out = np.empty((len(x), model.class_count))
    for c in range(model.class_count):
        out[:, c] = decision_function(x, p["support_x"], p["alpha"][c], p["y_pm"][c],
                                      p["bias"][c], kernel, gamma)
    return out

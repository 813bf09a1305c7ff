import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oilsense.classifiers import (
    KINDS, TRAINERS, TrainedModel, load_model, predict, save_model, score,
    train_forest, train_knn, train_logistic, train_svm,
)
from oilsense.classifiers import forest as F, knn as K, logistic as L, svm as S
from oilsense.errors import DivergenceError, DomainError, SchemaError

FAST = {
    "logistic": {"epochs": 200},
    "knn": {"k": 3},
    "forest": {"n_trees": 10, "max_depth": 6},
    "svm": {},
}


def blobs(n_per=40, k=4, d=3, spread=0.6, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=3.0, size=(k, d))
    y = np.repeat(np.arange(k), n_per)
    return centers[y] + rng.normal(scale=spread, size=(y.size, d)), y


# -- logistic regression ---------------------------------------------------

def test_logistic_separable():
    x = np.array([[-2.0, 0.0], [-1.5, 0.3], [1.5, -0.2], [2.0, 0.1]])
    y = np.array([0, 0, 1, 1])
    m = train_logistic(x, y, learning_rate=0.5, epochs=300)
    assert np.array_equal(predict(m, x), y)


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    x, y = blobs(n_per=10, k=3, seed=1)
    onehot = np.eye(3)[y]
    h = 1e-6
    for _ in range(10):
        w = rng.normal(size=(3, 3))
        b = rng.normal(size=3)
        _, gw, gb = L.loss_and_grad(w, b, x, onehot, 1e-2)
        num_w = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            wp, wm = w.copy(), w.copy()
            wp[idx] += h
            wm[idx] -= h
            num_w[idx] = (L.loss_and_grad(wp, b, x, onehot, 1e-2)[0]
                          - L.loss_and_grad(wm, b, x, onehot, 1e-2)[0]) / (2 * h)
        num_b = np.zeros_like(b)
        for c in range(3):
            bp, bm = b.copy(), b.copy()
            bp[c] += h
            bm[c] -= h
            num_b[c] = (L.loss_and_grad(w, bp, x, onehot, 1e-2)[0]
                        - L.loss_and_grad(w, bm, x, onehot, 1e-2)[0]) / (2 * h)
        analytic = np.concatenate([gw.ravel(), gb])
        numeric = np.concatenate([num_w.ravel(), num_b])
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
        assert rel < 1e-5


def test_logistic_zero_weights_symmetric_layout():
    x = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    y = np.array([0, 0, 1, 1])
    onehot = np.eye(2)[y]
    loss, gw, gb = L.loss_and_grad(np.zeros((2, 2)), np.zeros(2), x, onehot, 0.0)
    assert loss == pytest.approx(np.log(2))
    np.testing.assert_allclose(gb, 0.0, atol=1e-15)


def test_softmax_rows_sum_to_one():
    z = np.random.default_rng(0).normal(scale=50, size=(20, 5))
    p = L.softmax(z)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(p >= 0)


def test_logistic_loss_non_increasing_for_small_step():
    x, y = blobs(seed=2)
    m = train_logistic(x, y, learning_rate=0.05, epochs=100)
    h = m.params["loss_history"]
    assert np.all(np.diff(h) <= 1e-12)


def test_logistic_divergence_reports_epoch():
    x, y = blobs(seed=2)
    with pytest.raises(DivergenceError) as info:
        train_logistic(x * 1e100, y, learning_rate=1e200, epochs=50)
    assert info.value.epoch >= 1


# -- k nearest neighbors ---------------------------------------------------

def test_knn_k1_memorizes():
    x, y = blobs(seed=4)
    m = train_knn(x, y, k=1)
    assert np.array_equal(predict(m, x), y)


def test_knn_small_brute_force():
    x = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    m = train_knn(x, y, k=3)
    s = score(m, np.array([[1.4], [6.0], [9.0]]))
    np.testing.assert_allclose(s, [[1, 0], [2 / 3, 1 / 3], [0, 1]])
    # equidistant neighbors resolve to the lower training index
    assert K.neighbors(x, np.array([[5.0]]), 1)[0, 0] == 2
    assert K.neighbors(x, np.array([[6.0]]), 2)[0].tolist() == [2, 3]


def test_knn_votes_sum_to_one():
    x, y = blobs(seed=5)
    s = score(train_knn(x, y, k=5), x + 0.1)
    np.testing.assert_allclose(s.sum(axis=1), 1.0)


def test_knn_matches_naive_scan():
    rng = np.random.default_rng(6)
    train = rng.normal(size=(1500, 3))
    train[100] = train[7]  # exact duplicate to exercise tie order
    query = rng.normal(size=(200, 3))
    query[0] = train[7]
    fast = K.neighbors(train, query, 5, chunk=64)
    for q, row in zip(query, fast):
        assert row.tolist() == K.naive_neighbors(train, q, 5)


def test_knn_rejects_bad_k():
    x, y = blobs(n_per=2)
    with pytest.raises(DomainError):
        train_knn(x, y, k=0)
    with pytest.raises(DomainError):
        train_knn(x, y, k=9)


# -- random forest ---------------------------------------------------------

def test_gini_examples():
    assert F.gini([0, 0, 1, 1]) == 0.5
    assert F.gini([2, 2, 2]) == 0.0
    assert F.gini([0, 1, 2, 3]) == pytest.approx(0.75)


def test_best_split_four_points():
    f, t, g = F.best_split(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0, 0, 1, 1]))
    assert (f, t, g) == (0, 2.5, 0.0)


def exhaustive_split(x, y, min_leaf=1):
    best = (np.inf, -1, 0.0)
    n = len(y)
    for f in range(x.shape[1]):
        vals = np.unique(x[:, f])
        for a, b in zip(vals[:-1], vals[1:]):
            t = (a + b) / 2
            mask = x[:, f] <= t
            nl = mask.sum()
            if nl < min_leaf or n - nl < min_leaf:
                continue
            g = (nl * F.gini(y[mask]) + (n - nl) * F.gini(y[~mask])) / n
            if g < best[0] - 1e-12:
                best = (g, f, t)
    return best


def test_best_split_matches_enumeration():
    rng = np.random.default_rng(7)
    for trial in range(20):
        n = int(rng.integers(4, 25))
        x = rng.integers(0, 6, size=(n, 3)).astype(float) + rng.normal(size=(n, 3)) * (trial % 2)
        y = rng.integers(0, 3, size=n)
        g_ref, f_ref, t_ref = exhaustive_split(x, y)
        f, t, g = F.best_split(x, y, n_classes=3)
        assert g == pytest.approx(g_ref, abs=1e-12)
        assert (f, t) == (f_ref, pytest.approx(t_ref))


def test_best_split_no_candidate():
    f, _, _ = F.best_split(np.ones((4, 2)), np.array([0, 1, 0, 1]))
    assert f == -1


def test_forest_without_bootstrap_memorizes():
    x, y = blobs(seed=8, spread=2.0)
    m = train_forest(x, y, n_trees=1, max_depth=None, features_per_split=3, bootstrap=False)
    assert np.array_equal(predict(m, x), y)


def test_forest_deterministic(tmp_path):
    x, y = blobs(seed=9)
    paths = []
    for name in "ab":
        p = tmp_path / f"{name}.model"
        save_model(train_forest(x, y, n_trees=15, seed=123), p)
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    other = tmp_path / "c.model"
    save_model(train_forest(x, y, n_trees=15, seed=124), other)
    assert other.read_bytes() != paths[0]


def test_forest_vote_fractions():
    x, y = blobs(seed=10, spread=2.5)
    s = score(train_forest(x, y, n_trees=20), x)
    assert np.all((s >= 0) & (s <= 1))
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)


def test_forest_rejects_bad_params():
    x, y = blobs(n_per=5)
    for kwargs in ({"n_trees": 0}, {"max_depth": 0}, {"min_leaf": 0}, {"features_per_split": 4}):
        with pytest.raises(DomainError):
            train_forest(x, y, **kwargs)


# -- support vector machine ------------------------------------------------

def test_svm_two_points_bisector():
    x = np.array([[0.0, 0.0], [2.0, 2.0]])
    alpha, b, _, converged = S.fit_binary(x, [-1.0, 1.0], c_penalty=10.0, kernel="linear")
    assert converged
    w = (alpha * np.array([-1.0, 1.0])) @ x
    np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-9)
    assert b == pytest.approx(-1.0, abs=1e-9)
    mid = np.array([[1.0, 1.0], [0.0, 2.0]])
    np.testing.assert_allclose(
        S.decision_function(mid, x, alpha, np.array([-1.0, 1.0]), b, "linear"), 0.0, atol=1e-9)


def svm_fixtures():
    xor_x = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], float)
    xor_y = np.array([0, 0, 1, 1])
    bx, by = blobs(n_per=30, seed=11, spread=1.5)
    return [
        (xor_x, xor_y, {"kernel": "rbf", "gamma": 1.0, "c_penalty": 10.0}),
        (bx, by, {"kernel": "rbf"}),
        (bx, by, {"kernel": "linear", "c_penalty": 0.5}),
    ]


@pytest.mark.parametrize("case", range(3))
def test_svm_dual_feasibility(case):
    x, y, kw = svm_fixtures()[case]
    c = kw.get("c_penalty", 1.0)
    for cls in np.unique(y):
        y_pm = np.where(y == cls, 1.0, -1.0)
        alpha, _, _, _ = S.fit_binary(x, y_pm, **kw)
        assert np.all(alpha >= -1e-8) and np.all(alpha <= c + 1e-8)
        assert abs(float(alpha @ y_pm)) < 1e-8


def test_svm_xor():
    x, y, kw = svm_fixtures()[0]
    m = train_svm(x, y, **kw)
    assert np.array_equal(predict(m, x), y)
    assert m.manifest["convergence_warnings"] == []


def test_svm_iteration_cap_is_a_warning():
    x, y = blobs(n_per=60, seed=12, spread=3.0)
    m = train_svm(x, y, max_passes=1, tolerance=1e-9)
    assert m.manifest["convergence_warnings"]


def test_svm_rejects_bad_params():
    x, y = blobs(n_per=5)
    for kwargs in ({"c_penalty": 0}, {"kernel": "poly"}, {"gamma": -1.0}, {"max_passes": 0}):
        with pytest.raises(DomainError):
            train_svm(x, y, **kwargs)


# -- shared interface ------------------------------------------------------

@pytest.fixture(scope="module")
def trained():
    x, y = blobs(seed=13, spread=1.2)
    return x, y, {kind: TRAINERS[kind](x, y, seed=1, **FAST[kind]) for kind in KINDS}


@pytest.mark.parametrize("kind", KINDS)
def test_predict_is_argmax_of_score(trained, kind):
    x, _, models = trained
    s = score(models[kind], x)
    assert s.shape == (len(x), 4)
    assert np.array_equal(predict(models[kind], x), np.argmax(s, axis=1))


@pytest.mark.parametrize("kind", KINDS)
def test_persistence_round_trip(trained, kind, tmp_path):
    x, _, models = trained
    path = tmp_path / f"{kind}.model"
    save_model(models[kind], path)
    back = load_model(path)
    assert back.kind == kind and back.class_count == 4
    np.testing.assert_allclose(score(back, x), score(models[kind], x), rtol=1e-12, atol=1e-12)
    assert np.array_equal(predict(back, x), predict(models[kind], x))


def test_version_mismatch_fails_loudly(trained, tmp_path):
    import json
    import zipfile

    path = tmp_path / "m.model"
    save_model(trained[2]["knn"], path)
    with zipfile.ZipFile(path) as zf:
        entries = {n: zf.read(n) for n in zf.namelist()}
    meta = json.loads(entries["meta.json"])
    meta["version"] = 99
    entries["meta.json"] = json.dumps(meta).encode()
    with zipfile.ZipFile(path, "w") as zf:
        for n, data in entries.items():
            zf.writestr(n, data)
    with pytest.raises(SchemaError, match="version"):
        load_model(path)


@pytest.mark.parametrize("kind", KINDS)
def test_column_mismatch(trained, kind):
    x, _, models = trained
    with pytest.raises(SchemaError):
        score(models[kind], x[:, :2])
    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(DomainError):
        score(models[kind], bad)


@pytest.mark.parametrize("kind", KINDS)
def test_single_class_rejected(kind):
    with pytest.raises(DomainError):
        TRAINERS[kind](np.ones((4, 2)) * np.arange(4)[:, None], np.zeros(4, int))


def test_unknown_kind():
    with pytest.raises(SchemaError):
        score(TrainedModel("tree", {}, 2, 1), np.ones((1, 1)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_argmax_ties_to_lowest_class(seed):
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 3, size=(10, 4)).astype(float)
    from oilsense.classifiers.base import argmax_lowest
    got = argmax_lowest(s)
    for row, g in zip(s, got):
        assert g == min(i for i, v in enumerate(row) if v == row.max())


@pytest.mark.slow
def test_more_trees_fit_training_set_at_least_as_well():
    from oilsense import dataset as D
    from oilsense.dielectric import default_material_library
    from oilsense.resonator import ResonatorModel

    full = D.generate(ResonatorModel(), default_material_library(), D.default_z_grid(),
                      D.default_f_grid(), 0.05, 42)
    wins = 0
    for seed in range(5):
        ds = full.subset(D.stratified_subsample(full.labels, 4000, seed))
        x = D.Scaler.fit(ds.features, ds.feature_names).transform(ds.features)
        one = np.mean(predict(train_forest(x, ds.labels, n_trees=1, seed=seed), x) == ds.labels)
        many = np.mean(predict(train_forest(x, ds.labels, n_trees=100, seed=seed), x) == ds.labels)
        wins += many >= one
    assert wins >= 3

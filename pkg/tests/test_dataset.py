import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oilsense import dataset as D
from oilsense.dielectric import default_material_library
from oilsense.errors import DomainError, SchemaError
from oilsense.resonator import ResonatorModel

OILS = default_material_library()


def toy_dataset(n_per_class=250, k=4, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(k), n_per_class)
    feats = rng.normal(size=(labels.size, 3)) + labels[:, None]
    return D.Dataset(feats, labels, D.RAW_COLUMNS, tuple(f"c{i}" for i in range(k)))


def test_default_grids():
    z = D.default_z_grid()
    assert len(z) == 100
    assert z[0] == pytest.approx(0.001) and z[-1] == pytest.approx(50.0)
    assert np.allclose(np.diff(np.log(z)), np.log(z[1] / z[0]))
    f = D.default_f_grid()
    assert len(f) == 301 and f[0] == 1e9 and f[-1] == 4e9


def test_generate_cardinality_and_labels():
    ds = D.generate(ResonatorModel(), OILS, D.default_z_grid(), D.default_f_grid(), 0.05, 1)
    assert len(ds) == 120_400
    assert ds.class_counts() == {0: 30_100, 1: 30_100, 2: 30_100, 3: 30_100}
    assert ds.oil_names == ("coconut", "olive", "peanut", "soybean")
    assert ds.header == ("height_mm", "frequency_hz", "s21_db", "label")


def test_generate_labels_follow_name_order():
    ds = D.generate(ResonatorModel(), [OILS[3], OILS[1]], [0.1], [1.5e9], 0.0, 0)
    assert ds.oil_names == ("olive", "soybean")
    assert ds.labels.tolist() == [0, 1]


def test_generate_errors():
    r = ResonatorModel()
    with pytest.raises(DomainError):
        D.generate(r, [], [1.0], [2e9])
    with pytest.raises(DomainError):
        D.generate(r, OILS, [], [2e9])
    with pytest.raises(DomainError):
        D.generate(r, OILS, [-1.0], [2e9])


def test_generation_deterministic_and_regenerable():
    args = (ResonatorModel(), OILS, D.default_z_grid(10), D.default_f_grid(31), 0.05, 99)
    a = D.generate(*args)
    b = D.generate(*args)
    assert a.to_csv_bytes() == b.to_csv_bytes()
    c = D.regenerate(a.manifest)
    assert c.sha256() == a.sha256()
    other = D.generate(*args[:-1], 100)
    assert other.sha256() != a.sha256()


def test_trace_noise_independent_of_oil_subset():
    # a trace's noise is keyed by (label, z index), so generating fewer z
    # points leaves the shared leading traces unchanged
    r = ResonatorModel()
    f = D.default_f_grid(31)
    z = D.default_z_grid(10)
    a = D.generate(r, OILS, z, f, 0.05, 3)
    b = D.generate(r, OILS, z[:5], f, 0.05, 3)
    assert np.array_equal(a.features[:5 * 31], b.features[:5 * 31])


def test_clean_examples():
    feats = np.array([[1, 2, 3], [1, 2, 3], [4, 5, np.nan], [1, 2, 3], [7, 8, 9]], float)
    ds = D.Dataset(feats, [0, 0, 1, 0, 2])
    out = D.clean(ds)
    assert out.features.tolist() == [[1, 2, 3], [7, 8, 9]]
    assert out.labels.tolist() == [0, 2]
    missing_label = D.Dataset(np.ones((2, 3)), [-1, 1])
    assert D.clean(missing_label).labels.tolist() == [1]
    assert len(D.clean(D.Dataset(np.empty((0, 3)), []))) == 0


def test_clean_keeps_rows_differing_only_in_label():
    ds = D.Dataset(np.ones((2, 3)), [0, 1])
    assert len(D.clean(ds)) == 2


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0.0, 1.0, np.nan]), st.sampled_from([0.0, 2.0]),
                          st.sampled_from([0.0, 3.0]), st.integers(-1, 2)), max_size=30))
def test_clean_idempotent_and_order_preserving(rows):
    feats = np.array([r[:3] for r in rows], float).reshape(-1, 3)
    ds = D.Dataset(feats, [r[3] for r in rows])
    once = D.clean(ds)
    twice = D.clean(once)
    assert once.to_csv_bytes() == twice.to_csv_bytes()
    assert np.all(np.isfinite(once.features)) and np.all(once.labels >= 0)
    seen = {tuple(r) for r in np.column_stack([once.features, once.labels]).tolist()}
    assert len(seen) == len(once)


def test_split_counts_and_standardization():
    ds = toy_dataset()
    sp = D.split_standardize(ds, 0.8, True, seed=5)
    assert len(sp.train) == 800 and len(sp.test) == 200
    assert sp.train.class_counts() == {c: 200 for c in range(4)}
    assert sp.test.class_counts() == {c: 50 for c in range(4)}
    assert not set(sp.train_index) & set(sp.test_index)
    x = sp.x_train
    assert np.all(np.abs(x.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(x.std(axis=0) - 1) < 1e-9)
    # test rows use the train statistics, so they are not exactly centered
    assert np.all(np.abs(sp.x_test.mean(axis=0)) > 1e-6)
    refit = D.Scaler.fit(sp.test.features, ds.feature_names)
    assert not np.allclose(refit.mean, sp.scaler.mean)


def test_split_deterministic():
    ds = toy_dataset()
    a = D.split_standardize(ds, seed=11)
    b = D.split_standardize(ds, seed=11)
    c = D.split_standardize(ds, seed=12)
    assert np.array_equal(a.test_index, b.test_index)
    assert not np.array_equal(a.test_index, c.test_index)


@pytest.mark.parametrize("sizes", [(7, 13, 21, 2), (101, 99, 50, 3)])
def test_stratified_fraction_within_one(sizes):
    labels = np.concatenate([np.full(n, c) for c, n in enumerate(sizes)])
    ds = D.Dataset(np.random.default_rng(0).normal(size=(labels.size, 3)), labels)
    sp = D.split_standardize(ds, seed=3)
    for c, n in enumerate(sizes):
        assert abs(sp.train.class_counts()[c] - 0.8 * n) <= 1


def test_unstratified_split_total():
    ds = toy_dataset(n_per_class=25)
    sp = D.split_standardize(ds, stratified=False, seed=1)
    assert len(sp.train) == 80 and len(sp.test) == 20


def test_trace_grouped_split_keeps_traces_whole():
    ds = D.generate(ResonatorModel(), OILS, D.default_z_grid(10), D.default_f_grid(31), 0.05, 2)
    sp = D.split_standardize(ds, grouped=True, seed=4)
    key = lambda d: set(zip(d.labels.tolist(), d.height.tolist()))  # noqa: E731
    assert not key(sp.train) & key(sp.test)
    assert len(key(sp.train)) == 32 and len(key(sp.test)) == 8


def test_zero_variance_feature_named():
    feats = np.column_stack([np.ones(20), np.arange(20.0), np.arange(20.0) ** 2])
    ds = D.Dataset(feats, np.arange(20) % 2)
    with pytest.raises(DomainError, match="height_mm"):
        D.split_standardize(ds, seed=0)


def test_split_needs_two_rows_per_class():
    ds = D.Dataset(np.random.default_rng(0).normal(size=(5, 3)), [0, 0, 0, 0, 1])
    with pytest.raises(DomainError):
        D.split_standardize(ds, seed=0)


def test_csv_round_trip(tmp_path):
    ds = D.generate(ResonatorModel(), OILS, D.default_z_grid(5), D.default_f_grid(50), 0.05, 8)
    assert len(ds) == 1000
    path = tmp_path / "d.csv"
    D.export_csv(ds, path)
    assert path.read_text().splitlines()[0] == "height_mm,frequency_hz,s21_db,label"
    back = D.import_csv(path)
    assert np.array_equal(back.labels, ds.labels)
    np.testing.assert_allclose(back.features, ds.features, rtol=1e-12, atol=0)
    assert back.to_csv_bytes() == ds.to_csv_bytes()


def test_csv_missing_values_round_trip(tmp_path):
    ds = D.Dataset(np.array([[1.0, np.nan, 2.0]]), [-1])
    path = tmp_path / "m.csv"
    D.export_csv(ds, path)
    back = D.import_csv(path)
    assert np.isnan(back.features[0, 1]) and back.labels[0] == -1
    assert len(D.clean(back)) == 0


def test_csv_extra_column_is_schema_error(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("height_mm,frequency_hz,s21_db,temperature_c,label\n1,2,3,4,0\n")
    with pytest.raises(SchemaError, match="temperature_c"):
        D.import_csv(path)


def test_csv_malformed_row_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("height_mm,frequency_hz,s21_db,label\n1,2,3,0\n1,2,oops,0\n")
    with pytest.raises(SchemaError, match=":3:"):
        D.import_csv(path)
    path.write_text("height_mm,frequency_hz,s21_db,label\n1,2,3\n")
    with pytest.raises(SchemaError, match=":2:"):
        D.import_csv(path)


def test_stratified_subsample():
    labels = np.repeat([0, 1, 2, 3], [500, 500, 250, 250])
    idx = D.stratified_subsample(labels, 300, 0)
    assert len(idx) == 300
    assert np.bincount(labels[idx]).tolist() == [100, 100, 50, 50]
    assert np.array_equal(idx, np.sort(idx))
    assert len(D.stratified_subsample(labels, 5000, 0)) == 1500

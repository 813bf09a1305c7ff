"""Sweep dataset generation, cleaning, splitting and CSV I/O."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dielectric import MaterialModel
from .errors import ArtifactIOError, DomainError, SchemaError
from .resonator import DEFAULT_BAND, ResonatorModel, s21_response

SCHEMA_VERSION = "oilsense-sweep/1"
RAW_COLUMNS = ("height_mm", "frequency_hz", "s21_db")
RESONANCE_COLUMNS = (
    "height_mm",
    "f1_hz", "shift1", "depth1_db", "q1",
    "f2_hz", "shift2", "depth2_db", "q2",
)
KNOWN_SCHEMAS = {
    RAW_COLUMNS + ("label",): RAW_COLUMNS,
    RESONANCE_COLUMNS + ("label",): RESONANCE_COLUMNS,
}

# Seed-sequence stage keys; every random draw in the pipeline hangs off one
# master seed through these.
STAGE_GENERATE = 1
STAGE_SPLIT = 2
STAGE_TRAIN = 3


def derive_seed(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def default_z_grid(n: int = 100, start: float = 0.001, stop: float = 50.0) -> np.ndarray:
    return np.geomspace(start, stop, n)


def default_f_grid(n: int = 301, start: float = DEFAULT_BAND[0], stop: float = DEFAULT_BAND[1]) -> np.ndarray:
    return np.linspace(start, stop, n)


@dataclass
class Dataset:
    """Rows of features plus an integer oil label.

    Missing values are NaN in ``features`` and -1 in ``labels``.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = RAW_COLUMNS
    oil_names: tuple[str, ...] = ()
    schema_version: str = SCHEMA_VERSION
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float).reshape(-1, len(self.feature_names))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.features) != len(self.labels):
            raise SchemaError("features and labels differ in length")

    def __len__(self):
        return len(self.labels)

    def column(self, name: str) -> np.ndarray:
        return self.features[:, self.feature_names.index(name)]

    @property
    def height(self):
        return self.column("height_mm")

    @property
    def header(self) -> tuple[str, ...]:
        return self.feature_names + ("label",)

    def subset(self, index) -> "Dataset":
        return replace(self, features=self.features[index], labels=self.labels[index])

    def class_counts(self) -> dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        _write_rows(buf, self)
        return buf.getvalue().encode()

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv_bytes()).hexdigest()


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def _write_rows(fh, ds: Dataset):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ds.header)
    for row, label in zip(ds.features.tolist(), ds.labels.tolist()):
        w.writerow([_fmt(v) for v in row] + ["" if label < 0 else str(label)])


def generate(
    resonator: ResonatorModel,
    materials,
    z_grid,
    f_grid,
    noise_sigma_db: float = 0.05,
    seed: int = 0,
    band: tuple[float, float] = DEFAULT_BAND,
) -> Dataset:
    """One row per (oil, z, f); oils get labels in name order.

    The noise for each (oil, z) trace comes from its own child seed, so rows
    are independent of generation order.
    """
    materials = sorted(materials, key=lambda m: m.name)
    if not materials:
        raise DomainError("at least one material is required")
    z = np.asarray(z_grid, dtype=float)
    f = np.asarray(f_grid, dtype=float)
    if z.size == 0 or f.size == 0:
        raise DomainError("z and f grids must be non-empty")
    if np.any(z < 0):
        raise DomainError("z values must be >= 0")

    blocks = []
    for label, material in enumerate(materials):
        for iz, zz in enumerate(z):
            trace = s21_response(
                resonator, material, float(zz), f, noise_sigma_db,
                seed=derive_seed(seed, STAGE_GENERATE, label, iz), band=band,
            )
            blocks.append(np.column_stack([np.full(f.size, zz), f, trace.s21_db]))
    features = np.vstack(blocks)
    labels = np.repeat(np.arange(len(materials)), z.size * f.size)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "feature_mode": "raw",
        "seed": int(seed),
        "noise_sigma_db": float(noise_sigma_db),
        "band_hz": [float(band[0]), float(band[1])],
        "z_grid_mm": z.tolist(),
        "f_grid_hz": f.tolist(),
        "materials": [m.to_dict() for m in materials],
        "resonator": resonator.to_dict(),
    }
    return Dataset(features, labels, RAW_COLUMNS, tuple(m.name for m in materials), manifest=manifest)


def regenerate(manifest: dict) -> Dataset:
    """Rebuild a raw dataset from its generation manifest alone."""
    if manifest.get("feature_mode", "raw") != "raw":
        from .features import generate_feature_dataset

        return generate_feature_dataset(
            ResonatorModel.from_dict(manifest["resonator"]),
            [MaterialModel(**m) for m in manifest["materials"]],
            manifest["z_grid_mm"],
            manifest["f_grid_hz"],
            manifest["noise_sigma_db"],
            manifest["seed"],
            band=tuple(manifest["band_hz"]),
            prominence_db=manifest["prominence_db"],
        )
    return generate(
        ResonatorModel.from_dict(manifest["resonator"]),
        [MaterialModel(**m) for m in manifest["materials"]],
        manifest["z_grid_mm"],
        manifest["f_grid_hz"],
        manifest["noise_sigma_db"],
        manifest["seed"],
        band=tuple(manifest["band_hz"]),
    )


def clean(ds: Dataset) -> Dataset:
    """Drop rows with a missing field, then exact duplicates (first kept)."""
    complete = np.all(np.isfinite(ds.features), axis=1) & (ds.labels >= 0)
    idx = np.flatnonzero(complete)
    if idx.size == 0:
        return ds.subset(idx)
    rows = np.column_stack([ds.features[idx], ds.labels[idx].astype(float)])
    # -0.0 and 0.0 compare equal, so they count as duplicates here too
    rows = rows + 0.0
    _, first = np.unique(rows, axis=0, return_index=True)
    return ds.subset(idx[np.sort(first)])


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray, names) -> "Scaler":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        for name, s in zip(names, std):
            if not s > 0:
                raise DomainError(f"feature {name!r} has zero variance in the training split")
        return cls(mean, std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Scaler":
        return cls(np.asarray(data["mean"], float), np.asarray(data["std"], float))


@dataclass
class SplitDataset:
    train: Dataset
    test: Dataset
    scaler: Scaler
    train_index: np.ndarray
    test_index: np.ndarray

    @property
    def x_train(self):
        return self.scaler.transform(self.train.features)

    @property
    def x_test(self):
        return self.scaler.transform(self.test.features)


def _take(n: int, fraction: float) -> int:
    return int(np.floor(n * fraction + 0.5))


def split_indices(labels, train_fraction=0.8, stratified=True, seed=0, groups=None):
    """Shuffle-split row indices; with ``groups`` whole groups move together."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(derive_seed(seed, STAGE_SPLIT))
    if groups is None:
        units = np.arange(labels.size)
        unit_labels = labels
    else:
        units, first, inverse = np.unique(groups, return_index=True, return_inverse=True)
        unit_labels = labels[first]
    unit_ids = np.arange(len(units))

    train_units = []
    if stratified:
        for c in np.unique(unit_labels):
            members = unit_ids[unit_labels == c]
            if members.size < 2:
                raise DomainError(f"class {c} has fewer than 2 {'groups' if groups is not None else 'rows'}")
            perm = rng.permutation(members)
            train_units.append(perm[: _take(members.size, train_fraction)])
        train_units = np.concatenate(train_units)
    else:
        perm = rng.permutation(unit_ids)
        train_units = perm[: _take(unit_ids.size, train_fraction)]

    is_train_unit = np.zeros(len(units), dtype=bool)
    is_train_unit[train_units] = True
    is_train = is_train_unit if groups is None else is_train_unit[inverse]
    return np.flatnonzero(is_train), np.flatnonzero(~is_train)


def split_standardize(
    ds: Dataset,
    train_fraction: float = 0.80,
    stratified: bool = True,
    seed: int = 0,
    grouped: bool = False,
) -> SplitDataset:
    """80/20 split with a standardizer fitted on the training rows only.

    ``grouped`` keeps every row of one (oil, z) trace on the same side.
    """
    if not 0 < train_fraction < 1:
        raise DomainError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    groups = None
    if grouped:
        groups = ds.labels.astype(float) * 1e6 + np.unique(ds.height, return_inverse=True)[1]
    train_idx, test_idx = split_indices(ds.labels, train_fraction, stratified, seed, groups)
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    scaler = Scaler.fit(train.features, ds.feature_names)
    return SplitDataset(train, test, scaler, train_idx, test_idx)


def stratified_subsample(labels, cap: int, seed) -> np.ndarray:
    """Sorted row indices of at most ``cap`` rows, proportional per class."""
    labels = np.asarray(labels)
    if labels.size <= cap:
        return np.arange(labels.size)
    rng = np.random.default_rng(seed)
    keep = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        n = _take(members.size, cap / labels.size)
        keep.append(rng.choice(members, size=n, replace=False))
    return np.sort(np.concatenate(keep))


def export_csv(ds: Dataset, path) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            _write_rows(fh, ds)
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc


def import_csv(path, oil_names=(), manifest=None) -> Dataset:
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header not in KNOWN_SCHEMAS:
            known = set(RAW_COLUMNS + RESONANCE_COLUMNS + ("label",))
            extra = [c for c in header if c not in known]
            detail = f"unknown column(s) {extra}" if extra else f"unexpected header {list(header)}"
            raise SchemaError(f"{path}: {detail}")
        names = KNOWN_SCHEMAS[header]
        width = len(header)
        features, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise SchemaError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            try:
                features.append([float(v) if v != "" else np.nan for v in row[:-1]])
                labels.append(int(row[-1]) if row[-1] != "" else -1)
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    return Dataset(
        np.asarray(features, dtype=float).reshape(-1, len(names)),
        np.asarray(labels, dtype=np.int64),
        names,
        tuple(oil_names),
        manifest=dict(manifest or {}),
    )

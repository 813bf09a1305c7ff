"""Fitted-model container, common predict/score entry points, persistence."""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ArtifactIOError, DomainError, SchemaError

MODEL_FORMAT = "oilsense-model"
MODEL_VERSION = 1
KINDS = ("logistic", "knn", "forest", "svm")


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    params: dict[str, np.ndarray]
    class_count: int
    n_features: int
    manifest: dict = field(default_factory=dict)


def check_features(x, n_features: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise SchemaError(f"feature matrix must be 2-D, got shape {x.shape}")
    if n_features is not None and x.shape[1] != n_features:
        raise SchemaError(f"model expects {n_features} feature columns, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise DomainError("feature matrix contains non-finite values")
    return x


def check_training_data(x, y) -> tuple[np.ndarray, np.ndarray, int]:
    x = check_features(x)
    y = np.asarray(y)
    if y.shape != (x.shape[0],):
        raise SchemaError(f"need one label per row: {x.shape[0]} rows, {y.shape} labels")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.round(y)):
            raise DomainError("labels must be integers")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise DomainError("labels must be >= 0")
    k = int(y.max()) + 1 if y.size else 0
    if k < 2:
        raise DomainError("at least two classes are required")
    return x, y, k


def argmax_lowest(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax; np.argmax already returns the first (lowest) index on ties."""
    return np.argmax(scores, axis=1)


def score(model: TrainedModel, x) -> np.ndarray:
    """Per-class scores, shape (rows, class_count)."""
    from . import forest, knn, logistic, svm

    x = check_features(x, model.n_features)
    impl = {"logistic": logistic, "knn": knn, "forest": forest, "svm": svm}.get(model.kind)
    if impl is None:
        raise SchemaError(f"unknown model kind {model.kind!r}")
    return impl.score(model, x)


def predict(model: TrainedModel, x) -> np.ndarray:
    return argmax_lowest(score(model, x))


def save_model(model: TrainedModel, path) -> None:
    """Write a zip of .npy arrays plus a JSON header.

    Entries are written in sorted order with a fixed timestamp so identical
    models give byte-identical files.
    """
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "class_count": model.class_count,
        "n_features": model.n_features,
        "manifest": model.manifest,
        "arrays": sorted(model.params),
    }
    path = Path(path)
    try:
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
            _write_entry(zf, "meta.json", json.dumps(meta, sort_keys=True, indent=1).encode())
            for name in sorted(model.params):
                buf = io.BytesIO()
                np.save(buf, np.ascontiguousarray(model.params[name]), allow_pickle=False)
                _write_entry(zf, f"{name}.npy", buf.getvalue())
    except OSError as exc:
        raise ArtifactIOError(f"cannot write model file {path}: {exc}") from exc


def _write_entry(zf, name, data):
    info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
    info.compress_type = zipfile.ZIP_DEFLATED
    zf.writestr(info, data)


def load_model(path) -> TrainedModel:
    path = Path(path)
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json"))
            if meta.get("format") != MODEL_FORMAT:
                raise SchemaError(f"{path}: not an {MODEL_FORMAT} file")
            if meta.get("version") != MODEL_VERSION:
                raise SchemaError(
                    f"{path}: model format version {meta.get('version')!r}, "
                    f"this build reads version {MODEL_VERSION}"
                )
            params = {
                name: np.load(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
                for name in meta["arrays"]
            }
    except (OSError, zipfile.BadZipFile, KeyError) as exc:
        raise ArtifactIOError(f"cannot read model file {path}: {exc}") from exc
    return TrainedModel(meta["kind"], params, meta["class_count"], meta["n_features"], meta["manifest"])

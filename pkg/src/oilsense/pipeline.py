"""generate -> train -> evaluate -> report, as used by the CLI.

Every artifact records the hash of the configuration that produced it.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from .charts import metrics_svg, roc_svg
from .classifiers import KINDS, TRAINERS, load_model, save_model
from .config import RunConfig
from .errors import ArtifactIOError, ConfigError, DomainError, OilSenseError, SchemaError
from .evaluation import compare, evaluate, format_table
from .features import generate_feature_dataset

log = logging.getLogger(__name__)

DATASET_FILE = "dataset.csv"
SPLIT_FILE = "split.json"
MODEL_SUFFIX = ".model"

# Values reported for the original study; shown only as qualitative targets.
REPORTED_TARGETS = {
    "forest": {"accuracy": 0.9941, "macro_auc": 1.00},
    "knn": {"macro_auc": 0.99},
    "svm": {"macro_auc": 0.99},
    "logistic": {"accuracy": 0.5352, "macro_f1": 0.62, "macro_auc": 0.68},
}


def _write_text(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc


def _write_json(path: Path, data):
    _write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path, what: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ArtifactIOError(f"{what} not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactIOError(f"cannot read {what} {path}: {exc}") from exc


def manifest_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def model_seed(master: int, kind: str) -> int:
    seq = ds_mod.derive_seed(master, ds_mod.STAGE_TRAIN, KINDS.index(kind))
    return int(seq.generate_state(1)[0])


# -- generate ---------------------------------------------------------------

def build_dataset(cfg: RunConfig) -> ds_mod.Dataset:
    args = (cfg.resonator_model(), cfg.material_models(), cfg.z_values(), cfg.f_values(),
            cfg.noise_sigma_db, cfg.seed)
    if cfg.feature_mode == "resonance":
        return generate_feature_dataset(*args, band=cfg.band, prominence_db=cfg.prominence_db)
    return ds_mod.generate(*args, band=cfg.band)


def run_generate(cfg: RunConfig, out_dir=None) -> tuple[Path, ds_mod.Dataset]:
    out = Path(out_dir or cfg.out_dir)
    t0 = time.perf_counter()
    data = build_dataset(cfg)
    csv_path = out / DATASET_FILE
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ArtifactIOError(f"cannot create output directory {out}: {exc}") from exc
    blob = data.to_csv_bytes()
    try:
        csv_path.write_bytes(blob)
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {csv_path}: {exc}") from exc
    manifest = {
        **data.manifest,
        "config_hash": cfg.config_hash(),
        "oil_names": list(data.oil_names),
        "rows": len(data),
        "class_counts": {data.oil_names[c]: n for c, n in data.class_counts().items()},
        "sha256": ds_mod.hashlib.sha256(blob).hexdigest(),
    }
    _write_json(manifest_path(csv_path), manifest)
    data.manifest = manifest
    log.info("generated %d rows in %.1fs -> %s", len(data), time.perf_counter() - t0, csv_path)
    return csv_path, data


def load_dataset(csv_path) -> ds_mod.Dataset:
    mpath = manifest_path(csv_path)
    manifest = _read_json(mpath, "dataset manifest") if mpath.exists() else {}
    data = ds_mod.import_csv(csv_path, manifest.get("oil_names", ()), manifest)
    if not data.oil_names and len(data):
        data.oil_names = tuple(f"class{c}" for c in range(int(data.labels.max()) + 1))
    return data


# -- train ------------------------------------------------------------------

def _train_one(kind: str, cfg: RunConfig, x, y):
    seed = model_seed(cfg.seed, kind)
    extra = {}
    if kind == "logistic":
        p = cfg.models.logistic
        model = TRAINERS[kind](x, y, p.learning_rate, p.l2_penalty, p.epochs, seed)
    elif kind == "knn":
        model = TRAINERS[kind](x, y, cfg.models.knn.k, seed)
    elif kind == "forest":
        p = cfg.models.forest
        model = TRAINERS[kind](x, y, p.n_trees, p.max_depth, p.min_leaf, p.features_per_split, seed)
    else:
        p = cfg.models.svm
        rows = ds_mod.stratified_subsample(y, p.max_rows, ds_mod.derive_seed(seed, 0))
        extra = {"subsampled_rows": int(rows.size), "available_rows": int(len(y)),
                 "subsample_cap": p.max_rows}
        model = TRAINERS[kind](x[rows], y[rows], p.c_penalty, p.kernel, p.gamma, p.tolerance,
                               p.max_passes, seed)
    model.manifest.update(extra, config_hash=cfg.config_hash())
    for warning in model.manifest.get("convergence_warnings", []):
        log.warning("%s: %s", kind, warning)
    return model


def run_train(cfg: RunConfig, dataset_path, out_dir=None, models=None) -> tuple[list[Path], Path]:
    out = Path(out_dir or cfg.out_dir)
    kinds = list(models or KINDS)
    unknown = [k for k in kinds if k not in KINDS]
    if unknown:
        raise ConfigError(f"unknown model(s) {unknown}; choose from {list(KINDS)}")
    raw = load_dataset(dataset_path)
    data = ds_mod.clean(raw)
    log.info("dataset %s: %d rows (%d after cleaning)", dataset_path, len(raw), len(data))
    sp = ds_mod.split_standardize(data, cfg.split.train_fraction, cfg.split.stratified,
                                  cfg.seed, cfg.split.trace_grouped)
    x_train, y_train = sp.x_train, sp.train.labels

    split_path = out / SPLIT_FILE
    dataset_path = Path(dataset_path)
    _write_json(split_path, {
        "config_hash": cfg.config_hash(),
        "dataset": os.path.relpath(dataset_path.resolve(), split_path.parent.resolve()),
        "dataset_sha256": raw.sha256(),
        "feature_names": list(data.feature_names),
        "oil_names": list(data.oil_names),
        "split": cfg.split.model_dump(),
        "seed": cfg.seed,
        "scaler": sp.scaler.to_dict(),
        "train_rows": int(sp.train_index.size),
        "test_rows": int(sp.test_index.size),
        "train_index": sp.train_index.tolist(),
        "test_index": sp.test_index.tolist(),
    })

    paths = []
    for kind in kinds:
        t0 = time.perf_counter()
        try:
            model = _train_one(kind, cfg, x_train, y_train)
        except OilSenseError as exc:
            raise type(exc)(f"{kind}: {exc}") from exc
        path = out / "models" / f"{kind}{MODEL_SUFFIX}"
        path.parent.mkdir(parents=True, exist_ok=True)
        save_model(model, path)
        log.info("trained %s in %.1fs -> %s", kind, time.perf_counter() - t0, path)
        paths.append(path)
    return paths, split_path


# -- evaluate ---------------------------------------------------------------

def load_test_split(split_path):
    split_path = Path(split_path)
    if not split_path.exists():
        raise ArtifactIOError(
            f"test split {split_path} not found; run `oilsense train` first to create it")
    split = _read_json(split_path, "split manifest")
    data_path = (split_path.parent / split["dataset"]).resolve()
    raw = load_dataset(data_path)
    if raw.sha256() != split["dataset_sha256"]:
        raise SchemaError(f"{data_path} changed since the split was made (hash mismatch)")
    data = ds_mod.clean(raw)
    test = data.subset(np.asarray(split["test_index"], dtype=np.int64))
    scaler = ds_mod.Scaler.from_dict(split["scaler"])
    return split, scaler.transform(test.features), test.labels


def run_evaluate(model_paths, split_path, out_dir, force=False) -> dict:
    if not model_paths:
        raise DomainError("no model files given")
    out = Path(out_dir)
    split, x_test, y_test = load_test_split(split_path)
    names = tuple(split["oil_names"])
    reports, models = {}, {}
    for path in model_paths:
        model = load_model(path)
        mh = model.manifest.get("config_hash")
        if mh != split["config_hash"] and not force:
            raise ConfigError(
                f"{path} was trained under config {str(mh)[:12]}, the split under "
                f"{split['config_hash'][:12]}; pass --force to evaluate anyway")
        if model.kind in reports:
            raise DomainError(f"two models of kind {model.kind!r} given")
        reports[model.kind] = evaluate(model, x_test, y_test, names)
        models[model.kind] = model

    for kind, rep in reports.items():
        _write_json(out / "reports" / f"{kind}.json", {
            "model": kind,
            "config_hash": models[kind].manifest.get("config_hash"),
            "training_manifest": models[kind].manifest,
            "test_rows": int(len(y_test)),
            "metrics": rep.to_dict(),
        })
    rows = compare(reports) if len(reports) > 1 else [{"model": k, **r.summary()} for k, r in reports.items()]
    table = format_table(rows)
    _write_text(out / "comparison.txt", table + "\n")
    _write_json(out / "comparison.json", {"config_hash": split["config_hash"], "rows": rows})
    _write_roc_csv(out / "roc.csv", reports, names)
    _write_text(out / "roc.svg", roc_svg(
        {k: r.roc_curves for k, r in reports.items()},
        {k: list(r.auc) for k, r in reports.items()}, names))
    _write_text(out / "metrics.svg", metrics_svg(rows))
    return {"reports": reports, "rows": rows, "table": table}


def _write_roc_csv(path: Path, reports, names):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "class", "fpr", "tpr", "threshold"])
            for kind, rep in reports.items():
                for c, (fpr, tpr, thr) in enumerate(rep.roc_curves):
                    for a, b, t in zip(fpr.tolist(), tpr.tolist(), thr.tolist()):
                        w.writerow([kind, names[c] if c < len(names) else c, repr(a), repr(b), repr(t)])
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc


# -- reproduce --------------------------------------------------------------

def run_reproduce(cfg: RunConfig, out_dir=None, models=None) -> dict:
    out = Path(out_dir or cfg.out_dir)
    _write_text(out / "config.yaml", cfg.to_yaml())
    csv_path, _ = run_generate(cfg, out)
    paths, split_path = run_train(cfg, csv_path, out, models)
    result = run_evaluate(paths, split_path, out)
    summary = _summary(cfg, result["rows"])
    _write_json(out / "summary.json", summary)
    _write_text(out / "summary.md", _summary_markdown(summary, result["table"]))
    result["summary"] = summary
    return result


def _summary(cfg: RunConfig, rows) -> dict:
    obtained = {r["model"]: {k: v for k, v in r.items() if k != "model"} for r in rows}
    return {
        "config_hash": cfg.config_hash(),
        "feature_mode": cfg.feature_mode,
        "seed": cfg.seed,
        "obtained": obtained,
        "reported_targets": {k: v for k, v in REPORTED_TARGETS.items() if k in obtained},
        "note": "reported targets come from an unpublished full-wave dataset and are qualitative only",
    }


def _summary_markdown(summary: dict, table: str) -> str:
    lines = [
        "# Reproduction summary",
        "",
        f"config hash `{summary['config_hash'][:16]}`, seed {summary['seed']}, "
        f"feature mode `{summary['feature_mode']}`",
        "",
        "```",
        table,
        "```",
        "",
        "## Obtained vs reported (qualitative targets)",
        "",
        "| model | metric | obtained | reported |",
        "|---|---|---|---|",
    ]
    for model, targets in summary["reported_targets"].items():
        for metric, target in targets.items():
            got = summary["obtained"][model][metric]
            lines.append(f"| {model} | {metric} | {got:.4f} | {target:.4f} |")
    lines += ["", summary["note"], ""]
    return "\n".join(lines)

"""Classification metrics, one-vs-rest ROC/AUC and model comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifiers import TrainedModel, score
from .classifiers.base import argmax_lowest
from .errors import DomainError


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _safe_ratio(num, den):
    undefined = den == 0
    return np.where(undefined, 0.0, num / np.where(undefined, 1, den)), undefined


def roc_curve(positive, scores):
    """ROC points (fpr, tpr) and thresholds, highest threshold first.

    Rows with equal scores enter together as one step. The first point is
    (0, 0) at threshold +inf.
    """
    positive = np.asarray(positive, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    p = positive[order]
    tp = np.cumsum(p)
    fp = np.cumsum(~p)
    # last index of each run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tpr = np.r_[0.0, tp[ends] / n_pos if n_pos else np.zeros(ends.size)]
    fpr = np.r_[0.0, fp[ends] / n_neg if n_neg else np.zeros(ends.size)]
    thresholds = np.r_[np.inf, s[ends]]
    return fpr, tpr, thresholds


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def auc_trapezoid(fpr, tpr) -> float:
    return float(_trapezoid(tpr, fpr))


@dataclass
class EvalReport:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    precision_undefined: np.ndarray
    recall_undefined: np.ndarray
    f1_undefined: np.ndarray
    confusion: np.ndarray
    roc_curves: list = field(default_factory=list)  # per class: (fpr, tpr, thresholds)
    auc: np.ndarray = field(default_factory=lambda: np.zeros(0))
    class_names: tuple[str, ...] = ()

    @property
    def macro_precision(self) -> float:
        return float(np.mean(self.precision))

    @property
    def macro_recall(self) -> float:
        return float(np.mean(self.recall))

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.f1))

    @property
    def macro_auc(self) -> float:
        finite = self.auc[np.isfinite(self.auc)]
        return float(np.mean(finite)) if finite.size else float("nan")

    @property
    def flags(self) -> list[str]:
        out = []
        for what, mask in (("precision", self.precision_undefined),
                           ("recall", self.recall_undefined), ("f1", self.f1_undefined)):
            for c in np.flatnonzero(mask):
                out.append(f"{what} undefined for class {self._name(c)} (reported as 0)")
        for c in np.flatnonzero(~np.isfinite(self.auc)):
            out.append(f"auc undefined for class {self._name(c)} (single-class test labels)")
        return out

    def _name(self, c):
        return self.class_names[c] if c < len(self.class_names) else str(c)

    def summary(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "macro_auc": self.macro_auc,
        }

    def to_dict(self) -> dict:
        names = [self._name(c) for c in range(len(self.precision))]
        return {
            **self.summary(),
            "classes": names,
            "per_class": {
                n: {
                    "precision": float(self.precision[c]),
                    "recall": float(self.recall[c]),
                    "f1": float(self.f1[c]),
                    "auc": None if not np.isfinite(self.auc[c]) else float(self.auc[c]),
                    "support": int(self.confusion[c].sum()),
                }
                for c, n in enumerate(names)
            },
            "confusion": self.confusion.tolist(),
            "flags": self.flags,
        }


def report_from_scores(y_true, scores, class_names=()) -> EvalReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    if y_true.size == 0:
        raise DomainError("cannot evaluate on an empty test set")
    k = scores.shape[1]
    y_pred = argmax_lowest(scores)
    cm = confusion_matrix(y_true, y_pred, k)
    tp = np.diag(cm).astype(float)
    precision, p_undef = _safe_ratio(tp, cm.sum(axis=0))
    recall, r_undef = _safe_ratio(tp, cm.sum(axis=1))
    f1, f_undef = _safe_ratio(2 * precision * recall, precision + recall)
    curves, aucs = [], []
    for c in range(k):
        pos = y_true == c
        fpr, tpr, thr = roc_curve(pos, scores[:, c])
        curves.append((fpr, tpr, thr))
        aucs.append(auc_trapezoid(fpr, tpr) if 0 < pos.sum() < pos.size else np.nan)
    return EvalReport(
        accuracy=float(np.trace(cm) / cm.sum()),
        precision=precision, recall=recall, f1=f1,
        precision_undefined=p_undef, recall_undefined=r_undef, f1_undefined=f_undef,
        confusion=cm, roc_curves=curves, auc=np.asarray(aucs), class_names=tuple(class_names),
    )


def evaluate(model: TrainedModel, x_test, y_test, class_names=()) -> EvalReport:
    x_test = np.asarray(x_test, dtype=float)
    if len(x_test) == 0:
        raise DomainError("cannot evaluate on an empty test set")
    return report_from_scores(y_test, score(model, x_test), class_names)


COMPARISON_COLUMNS = ("accuracy", "macro_precision", "macro_recall", "macro_f1", "macro_auc")


def compare(reports: dict[str, EvalReport]) -> list[dict]:
    """Rows of headline metrics, best accuracy first, ties by name."""
    if len(reports) < 2:
        raise DomainError("comparison needs at least two reports")
    rows = [{"model": name, **rep.summary()} for name, rep in reports.items()]
    rows.sort(key=lambda r: (-r["accuracy"], r["model"]))
    return rows


def format_table(rows: list[dict]) -> str:
    header = f"{'model':<10}" + "".join(f"{c:>17}" for c in COMPARISON_COLUMNS)
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r['model']:<10}" + "".join(f"{r[c]:>17.4f}" for c in COMPARISON_COLUMNS))
    return "\n".join(lines)

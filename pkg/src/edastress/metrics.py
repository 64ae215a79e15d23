"""Classification metrics from a confusion matrix.

The binary task reports the stress class (label 1) precision/recall/f1 as
its headline numbers; the three-class task reports macro averages. Either
way the headline f1 is the harmonic mean of the reported precision and
recall, and the per-class breakdown is always included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def confusion_matrix(preds, labels, num_classes: int) -> np.ndarray:
    """Entry (i, j) counts samples with true class i predicted as j."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise ValueError(f"length mismatch: {preds.shape} preds vs {labels.shape} labels")
    if len(preds) and (preds.min() < 0 or preds.max() >= num_classes
                       or labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"class ids must lie in [0, {num_classes})")
    mat = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(mat, (labels, preds), 1)
    return mat


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: np.ndarray
    per_class: tuple[ClassScores, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    averaging: str  # "positive_class" (binary) or "macro" (three classes)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "averaging": self.averaging,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.tolist(),
            "per_class": [
                {"precision": c.precision, "recall": c.recall, "f1": c.f1, "support": c.support}
                for c in self.per_class
            ],
        }


def _harmonic(p: float, r: float) -> float:
    return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


def metrics_from_confusion(confusion: np.ndarray) -> Metrics:
    confusion = np.asarray(confusion, dtype=np.int64)
    num_classes = confusion.shape[0]
    total = int(confusion.sum())
    accuracy = float(np.trace(confusion) / total) if total else 0.0
    per_class = []
    for c in range(num_classes):
        tp = int(confusion[c, c])
        predicted = int(confusion[:, c].sum())
        actual = int(confusion[c, :].sum())
        precision = tp / predicted if predicted else 0.0
        recall = tp / actual if actual else 0.0
        per_class.append(ClassScores(precision, recall, _harmonic(precision, recall), actual))
    macro_p = float(np.mean([c.precision for c in per_class]))
    macro_r = float(np.mean([c.recall for c in per_class]))
    macro_f1 = _harmonic(macro_p, macro_r)
    if num_classes == 2:
        headline_p, headline_r = per_class[1].precision, per_class[1].recall
        averaging = "positive_class"
    else:
        headline_p, headline_r = macro_p, macro_r
        averaging = "macro"
    return Metrics(
        accuracy=accuracy,
        precision=headline_p,
        recall=headline_r,
        f1=_harmonic(headline_p, headline_r),
        confusion=confusion,
        per_class=tuple(per_class),
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f1,
        averaging=averaging,
    )


def compute_metrics(preds, labels, num_classes: int) -> Metrics:
    return metrics_from_confusion(confusion_matrix(preds, labels, num_classes))

"""Report serialization: JSON documents, flat CSVs, plot-ready data files,
and the per-run manifest. All writers are deterministic (sorted keys, repr
floats); wall-clock information lives only in the manifest so identical
runs produce byte-identical reports.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .metrics import Metrics
from .personalization import LosoReport, PersonalizationReport
from .pipeline import CLASS_NAMES, WindowedDataset, _subject_sort_key
from .training import CvReport, TrainReport

PERSONALIZATION_CSV_HEADER = ("subject", "original_acc", "total_samples",
                              "retrain_size", "final_acc")


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_csv_cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _metrics_dict(metrics: Metrics | None) -> dict | None:
    return None if metrics is None else metrics.to_dict()


def train_report_dict(report: TrainReport) -> dict:
    return {
        "kind": "train",
        "history": [
            {"epoch": h.epoch, "loss": h.loss, "train_accuracy": h.train_accuracy}
            for h in report.history
        ],
        "train_metrics": _metrics_dict(report.train_metrics),
        "test_metrics": _metrics_dict(report.test_metrics),
        "warnings": report.warnings,
    }


def eval_report_dict(metrics: Metrics) -> dict:
    return {"kind": "eval", "metrics": metrics.to_dict()}


def cv_report_dict(report: CvReport) -> dict:
    return {
        "kind": "cv",
        "k": len(report.folds),
        "folds": [
            {"fold": f.fold, "train_accuracy": f.train_accuracy, "train_f1": f.train_f1,
             "val_accuracy": f.val_accuracy, "val_f1": f.val_f1}
            for f in report.folds
        ],
        "mean_train_accuracy": report.mean_train_accuracy,
        "std_train_accuracy": report.std_train_accuracy,
        "mean_train_f1": report.mean_train_f1,
        "std_train_f1": report.std_train_f1,
        "mean_val_accuracy": report.mean_val_accuracy,
        "std_val_accuracy": report.std_val_accuracy,
        "mean_val_f1": report.mean_val_f1,
        "std_val_f1": report.std_val_f1,
    }


def loso_report_dict(report: LosoReport) -> dict:
    return {
        "kind": "loso",
        "folds": [
            {"subject": f.left_out_subject,
             "train_accuracy": f.train_metrics.accuracy, "train_f1": f.train_metrics.f1,
             "test_accuracy": f.test_metrics.accuracy, "test_f1": f.test_metrics.f1,
             "train_metrics": _metrics_dict(f.train_metrics),
             "test_metrics": _metrics_dict(f.test_metrics)}
            for f in report.folds
        ],
        "mean_train_accuracy": report.mean_train_accuracy,
        "mean_train_f1": report.mean_train_f1,
        "mean_test_accuracy": report.mean_test_accuracy,
        "mean_test_f1": report.mean_test_f1,
    }


def personalization_report_dict(reports: Sequence[PersonalizationReport]) -> dict:
    return {
        "kind": "personalization",
        "subjects": [
            {"subject": r.subject,
             "original_test_accuracy": r.original_test_accuracy,
             "total_samples": r.total_samples,
             "retrain_sample_size": r.retrain_sample_size,
             "final_test_accuracy": r.final_test_accuracy,
             "target_accuracy": r.target_accuracy,
             "reached_target": r.reached_target,
             "mode": r.mode,
             "trace": [
                 {"k": s.k, "full_set_accuracy": s.full_set_accuracy,
                  "remainder_accuracy": s.remainder_accuracy}
                 for s in r.trace
             ]}
            for r in reports
        ],
    }


def write_history_csv(path: str | Path, report: TrainReport) -> None:
    write_csv(path, ("epoch", "loss", "train_accuracy"),
              [(h.epoch, h.loss, h.train_accuracy) for h in report.history])


def write_cv_csv(path: str | Path, report: CvReport) -> None:
    write_csv(path, ("fold", "train_accuracy", "train_f1", "val_accuracy", "val_f1"),
              [(f.fold, f.train_accuracy, f.train_f1, f.val_accuracy, f.val_f1)
               for f in report.folds])


def write_loso_csv(path: str | Path, report: LosoReport) -> None:
    write_csv(path, ("subject", "train_accuracy", "train_f1", "test_accuracy", "test_f1"),
              [(f.left_out_subject, f.train_metrics.accuracy, f.train_metrics.f1,
                f.test_metrics.accuracy, f.test_metrics.f1) for f in report.folds])


def write_personalization_csv(path: str | Path,
                              reports: Sequence[PersonalizationReport]) -> None:
    write_csv(path, PERSONALIZATION_CSV_HEADER,
              [(r.subject, r.original_test_accuracy, r.total_samples,
                r.retrain_sample_size, r.final_test_accuracy) for r in reports])


PLOT_KINDS = ("loso_accuracy", "loso_f1", "history")


def emit_plot_data(report, kind: str, path: str | Path) -> None:
    """Plot-ready CSV behind the LOSO bar charts or the training curve.

    `report` may be the in-memory report object or its parsed JSON dict;
    values are echoed exactly, never recomputed.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    if isinstance(report, LosoReport):
        report = loso_report_dict(report)
    elif isinstance(report, TrainReport):
        report = train_report_dict(report)
    if not isinstance(report, dict):
        raise ValueError(f"cannot emit plot data from {type(report).__name__}")
    report_kind = report.get("kind")
    if kind in ("loso_accuracy", "loso_f1"):
        if report_kind != "loso":
            raise ValueError(f"plot kind {kind!r} needs a loso report, got {report_kind!r}")
        metric = "accuracy" if kind == "loso_accuracy" else "f1"
        rows = sorted(report["folds"], key=lambda f: _subject_sort_key(f["subject"]))
        write_csv(path, ("subject", "train", "test"),
                  [(f["subject"], f[f"train_{metric}"], f[f"test_{metric}"]) for f in rows])
    else:
        if report_kind != "train":
            raise ValueError(f"plot kind 'history' needs a train report, got {report_kind!r}")
        write_csv(path, ("epoch", "loss", "train_accuracy"),
                  [(h["epoch"], h["loss"], h["train_accuracy"]) for h in report["history"]])


def corpus_summary(ds: WindowedDataset) -> dict:
    counts = ds.class_counts()
    per_subject = {tag: int((ds.subjects == tag).sum()) for tag in ds.subject_tags()}
    return {
        "num_windows": len(ds),
        "windows_per_class": {CLASS_NAMES[i]: int(c) for i, c in enumerate(counts)},
        "per_subject": per_subject,
    }


def write_manifest(path: str | Path, command: str, config: dict, version: str,
                   started_utc: str, duration_seconds: float,
                   corpus: dict | None = None) -> None:
    doc = {
        "tool": "edastress",
        "version": version,
        "command": command,
        "config": config,
        "corpus": corpus,
        "started_utc": started_utc,
        "duration_seconds": duration_seconds,
    }
    write_json(path, doc)

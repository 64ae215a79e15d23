"""Mini-batch training loop, evaluation, task assembly, and k-fold
cross-validation for the bi- and tri-affective tasks.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .metrics import Metrics, compute_metrics
from .network import ModelConfig, ModelParams, forward_batch, init_model, loss_and_grads
from .optim import adam_step, init_adam, init_sgd, sgd_step
from .pipeline import WindowedDataset, kfold

TASK_BI = "bi"
TASK_TRI = "tri"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    lr: float = 0.001
    seed: int = 0
    shuffle_each_epoch: bool = True
    optimizer: str = "adam"  # or "sgd"
    loss_reduction: str = "mean"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.loss_reduction != "mean":
            raise ValueError("only mean loss reduction is supported")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    train_accuracy: float


@dataclass
class TrainReport:
    params: ModelParams
    history: list[EpochStats]
    train_metrics: Metrics
    test_metrics: Metrics | None
    warnings: list[str]


def assemble_task(ds: WindowedDataset, task: str) -> WindowedDataset:
    """bi: drop amusement windows and keep {baseline=0, stress=1}; tri: all three."""
    if task == TASK_BI:
        keep = np.flatnonzero(ds.labels != 2)
        return WindowedDataset(ds.values[keep], ds.labels[keep], ds.subjects[keep], 2)
    if task == TASK_TRI:
        return WindowedDataset(ds.values, ds.labels, ds.subjects, 3)
    raise ValueError(f"unknown task {task!r}; expected 'bi' or 'tri'")


def predict(params: ModelParams, values: np.ndarray, cfg: ModelConfig,
            chunk: int = 256) -> np.ndarray:
    """Argmax class predictions in inference mode."""
    preds = np.empty(values.shape[0], dtype=np.int64)
    for start in range(0, values.shape[0], chunk):
        logits, _ = forward_batch(params, values[start:start + chunk], cfg, training=False)
        preds[start:start + chunk] = logits.argmax(axis=1)
    return preds


def evaluate(params: ModelParams, ds: WindowedDataset, cfg: ModelConfig) -> Metrics:
    if len(ds) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    preds = predict(params, ds.values, cfg)
    return compute_metrics(preds, ds.labels, ds.num_classes)


def train(train_set: WindowedDataset, cfg: TrainConfig, mcfg: ModelConfig,
          test_set: WindowedDataset | None = None,
          initial_params: ModelParams | None = None) -> TrainReport:
    """Seeded mini-batch training; the last partial batch is kept, shuffling
    is re-drawn each epoch, and the whole run is deterministic per seed."""
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    if train_set.num_classes != mcfg.num_classes:
        raise ValueError(f"dataset has {train_set.num_classes} classes, "
                         f"model expects {mcfg.num_classes}")
    if train_set.window_len != mcfg.input_len:
        raise ValueError(f"window length {train_set.window_len} != model input {mcfg.input_len}")

    warnings = []
    counts = train_set.class_counts()
    for cls in np.flatnonzero(counts == 0):
        warnings.append(f"class {cls} absent from training set")

    params = initial_params.copy() if initial_params is not None else init_model(mcfg, cfg.seed)
    if cfg.optimizer == "adam":
        state = init_adam(params, lr=cfg.lr)
        step = adam_step
    else:
        state = init_sgd(params, lr=cfg.lr)
        step = sgd_step

    rng = np.random.default_rng(cfg.seed)
    n = len(train_set)
    values, labels = train_set.values, train_set.labels
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle_each_epoch else np.arange(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads, logits = loss_and_grads(
                params, values[idx], labels[idx], mcfg, training=True, rng=rng)
            params, state = step(params, grads, state)
            loss_sum += loss * len(idx)
            correct += int((logits.argmax(axis=1) == labels[idx]).sum())
        history.append(EpochStats(epoch, loss_sum / n, correct / n))

    train_metrics = evaluate(params, train_set, mcfg)
    test_metrics = evaluate(params, test_set, mcfg) if test_set is not None else None
    return TrainReport(params, history, train_metrics, test_metrics, warnings)


@dataclass(frozen=True)
class CvFold:
    fold: int
    train_accuracy: float
    train_f1: float
    val_accuracy: float
    val_f1: float


@dataclass
class CvReport:
    folds: list[CvFold]
    mean_train_accuracy: float
    std_train_accuracy: float
    mean_train_f1: float
    std_train_f1: float
    mean_val_accuracy: float
    std_val_accuracy: float
    mean_val_f1: float
    std_val_f1: float


def _run_cv_fold(args) -> CvFold:
    i, train_ds, val_ds, cfg, mcfg = args
    try:
        report = train(train_ds, replace(cfg, seed=cfg.seed + i), mcfg, test_set=val_ds)
    except Exception as exc:
        raise RuntimeError(f"cross-validation fold {i} failed: {exc}") from exc
    return CvFold(i, report.train_metrics.accuracy, report.train_metrics.f1,
                  report.test_metrics.accuracy, report.test_metrics.f1)


def cross_validate(ds: WindowedDataset, k: int, cfg: TrainConfig, mcfg: ModelConfig,
                   jobs: int = 1) -> CvReport:
    """Train k independent stratified folds (seeds seed+fold) and aggregate."""
    tasks = [(i, tr, va, cfg, mcfg) for i, (tr, va) in enumerate(kfold(ds, k, cfg.seed))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_cv_fold, tasks))
    else:
        folds = [_run_cv_fold(t) for t in tasks]
    ta = np.array([f.train_accuracy for f in folds])
    tf = np.array([f.train_f1 for f in folds])
    va = np.array([f.val_accuracy for f in folds])
    vf = np.array([f.val_f1 for f in folds])
    return CvReport(folds,
                    float(ta.mean()), float(ta.std()),
                    float(tf.mean()), float(tf.std()),
                    float(va.mean()), float(va.std()),
                    float(vf.mean()), float(vf.std()))

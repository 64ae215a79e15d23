"""Leave-one-subject-out analysis and incremental model personalization.

LOSO trains one model per held-out subject. Personalization then grows a
nested, stratified sample of the held-out subject's windows one step at a
time, fine-tuning the base model on the sample until accuracy on the
subject's full window set reaches the base model's training-set accuracy.
Accuracy on the not-yet-sampled remainder is tracked alongside, since the
full-set number re-scores the very windows used for re-training.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .metrics import Metrics
from .network import ModelConfig, ModelParams
from .pipeline import WindowedDataset
from .training import TrainConfig, evaluate, train


@dataclass
class LosoFoldReport:
    left_out_subject: str
    train_metrics: Metrics
    test_metrics: Metrics
    params: ModelParams


@dataclass
class LosoReport:
    folds: list[LosoFoldReport]
    mean_train_accuracy: float
    mean_train_f1: float
    mean_test_accuracy: float
    mean_test_f1: float


def loso_run(corpus: WindowedDataset, left_out: str, cfg: TrainConfig,
             mcfg: ModelConfig) -> LosoFoldReport:
    """Train on every other subject's windows, evaluate on the left-out one."""
    tags = corpus.subject_tags()
    if left_out not in tags:
        raise ValueError(f"unknown subject {left_out!r}; corpus has {tags}")
    train_ds = corpus.without_subject(left_out)
    test_ds = corpus.for_subject(left_out)
    if left_out in train_ds.subject_tags():
        raise AssertionError(f"left-out subject {left_out} leaked into the training set")
    report = train(train_ds, cfg, mcfg, test_set=test_ds)
    return LosoFoldReport(left_out, report.train_metrics, report.test_metrics, report.params)


def _run_loso_fold(args) -> LosoFoldReport:
    corpus, subject, cfg, mcfg = args
    try:
        return loso_run(corpus, subject, cfg, mcfg)
    except Exception as exc:
        raise RuntimeError(f"LOSO fold for subject {subject} failed: {exc}") from exc


def loso_all(corpus: WindowedDataset, cfg: TrainConfig, mcfg: ModelConfig,
             jobs: int = 1) -> LosoReport:
    """One fold per subject, seeded seed+index, in corpus subject order."""
    subjects = corpus.subject_tags()
    if len(subjects) < 2:
        raise ValueError("LOSO needs at least 2 subjects")
    tasks = [(corpus, subject, replace(cfg, seed=cfg.seed + i), mcfg)
             for i, subject in enumerate(subjects)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_loso_fold, tasks))
    else:
        folds = [_run_loso_fold(t) for t in tasks]
    return LosoReport(
        folds,
        float(np.mean([f.train_metrics.accuracy for f in folds])),
        float(np.mean([f.train_metrics.f1 for f in folds])),
        float(np.mean([f.test_metrics.accuracy for f in folds])),
        float(np.mean([f.test_metrics.f1 for f in folds])),
    )


@dataclass(frozen=True)
class PersonalizationStep:
    k: int
    full_set_accuracy: float
    remainder_accuracy: float | None  # None once every window has been sampled


@dataclass
class PersonalizationReport:
    subject: str
    original_test_accuracy: float
    total_samples: int
    retrain_sample_size: int
    final_test_accuracy: float
    target_accuracy: float
    reached_target: bool
    trace: list[PersonalizationStep]
    params: ModelParams
    mode: str


def _stratified_order(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Permutation whose prefixes track the class proportions of `labels`."""
    n = len(labels)
    classes = np.unique(labels)
    queues = {c: list(rng.permutation(np.flatnonzero(labels == c))) for c in classes}
    share = {c: len(queues[c]) / n for c in classes}
    taken = {c: 0 for c in classes}
    order = np.empty(n, dtype=np.int64)
    for pos in range(n):
        # the class currently furthest behind its proportional share
        best = max((c for c in classes if queues[c]),
                   key=lambda c: ((pos + 1) * share[c] - taken[c], -c))
        order[pos] = queues[best].pop(0)
        taken[best] += 1
    return order


def personalize(base: ModelParams, leftout: WindowedDataset, target: float,
                cfg: TrainConfig, mcfg: ModelConfig, *,
                epochs_per_step: int = 50, stride: int = 1,
                mode: str = "finetune") -> PersonalizationReport:
    """Grow the re-training sample until full-set accuracy reaches `target`.

    Samples are nested prefixes of one seeded stratified permutation. In
    "finetune" mode each step continues from the previous step's weights;
    "scratch" re-initializes from cfg.seed and trains on the sample alone.
    Running out of windows before reaching the target is a valid outcome,
    flagged via reached_target.
    """
    if len(leftout) == 0:
        raise ValueError("left-out dataset is empty")
    if mode not in ("finetune", "scratch"):
        raise ValueError(f"unknown personalization mode {mode!r}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    subjects = leftout.subject_tags()
    if len(subjects) != 1:
        raise ValueError(f"left-out dataset must hold one subject, found {subjects}")
    subject = subjects[0]

    original = evaluate(base, leftout, mcfg).accuracy
    if original >= target:
        return PersonalizationReport(subject, original, len(leftout), 0, original,
                                     target, True, [], base.copy(), mode)

    rng = np.random.default_rng(cfg.seed)
    order = _stratified_order(leftout.labels, rng)
    n = len(leftout)
    params = base.copy()
    trace: list[PersonalizationStep] = []
    k = 1
    reached = False
    while True:
        sample = leftout.subset(order[:k])
        step_cfg = replace(cfg, seed=cfg.seed + k, epochs=epochs_per_step)
        initial = params if mode == "finetune" else None
        params = train(sample, step_cfg, mcfg, initial_params=initial).params
        full_acc = evaluate(params, leftout, mcfg).accuracy
        remainder = order[k:]
        rem_acc = evaluate(params, leftout.subset(remainder), mcfg).accuracy \
            if len(remainder) else None
        trace.append(PersonalizationStep(k, full_acc, rem_acc))
        if full_acc >= target:
            reached = True
            break
        if k == n:
            break
        k = min(k + stride, n)

    return PersonalizationReport(subject, original, n, k, trace[-1].full_set_accuracy,
                                 target, reached, trace, params, mode)

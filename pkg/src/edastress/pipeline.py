"""EDA ingestion, normalization, windowing, and dataset assembly.

Subjects arrive as 4 Hz skin-conductance streams with a per-sample condition
code (WESAD coding: 1=baseline, 2=stress, 3=amusement, everything else is
dropped). The pipeline min-max normalizes each subject's full recording,
cuts 60 s windows with 50% overlap inside contiguous same-condition runs,
and provides stratified splits and k-folds over the windowed result.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

SAMPLING_RATE_HZ = 4

CODE_BASELINE = 1
CODE_STRESS = 2
CODE_AMUSEMENT = 3
CODE_TO_CLASS = {CODE_BASELINE: 0, CODE_STRESS: 1, CODE_AMUSEMENT: 2}
CLASS_NAMES = ("baseline", "stress", "amusement")

CSV_HEADER = ("eda_uS", "label")


class CsvFormatError(ValueError):
    """Raised when a subject CSV does not match the expected format."""


class DegenerateSignalError(ValueError):
    """Raised for constant recordings that cannot be min-max normalized."""


class StratificationError(ValueError):
    """Raised when a class is too small to appear on both sides of a split."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EdaRecording:
    """One subject's raw EDA stream plus per-sample condition codes."""

    subject_id: str
    samples: np.ndarray
    condition_codes: np.ndarray
    sampling_rate_hz: int = SAMPLING_RATE_HZ

    def __post_init__(self):
        samples = _readonly(np.ascontiguousarray(self.samples, dtype=np.float64))
        codes = _readonly(np.ascontiguousarray(self.condition_codes, dtype=np.int64))
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "condition_codes", codes)
        if self.sampling_rate_hz != SAMPLING_RATE_HZ:
            raise ValueError(f"sampling_rate_hz must be {SAMPLING_RATE_HZ}, got {self.sampling_rate_hz}")
        if samples.ndim != 1 or codes.ndim != 1:
            raise ValueError("samples and condition_codes must be 1-D")
        if len(samples) != len(codes):
            raise ValueError(f"length mismatch: {len(samples)} samples vs {len(codes)} codes")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"recording {self.subject_id} contains non-finite samples")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class PipelineConfig:
    """Windowing parameters; defaults give 240-sample windows with 120-sample hop."""

    window_seconds: int = 60
    overlap_fraction: float = 0.5

    def __post_init__(self):
        if self.window_seconds < 1:
            raise ValueError("window_seconds must be >= 1")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in [0, 1)")
        if self.hop_samples < 1:
            raise ValueError("hop_samples must be >= 1")

    @property
    def window_len_samples(self) -> int:
        return self.window_seconds * SAMPLING_RATE_HZ

    @property
    def hop_samples(self) -> int:
        return int(round(self.window_len_samples * (1.0 - self.overlap_fraction)))


@dataclass(frozen=True)
class EdaWindow:
    values: np.ndarray
    class_label: int
    subject_id: str


class WindowedDataset:
    """Fixed-length windows with class labels and subject tags, array-backed.

    `values` is [n_windows, window_len] float64 in [0, 1], `labels` holds the
    class index per window, `subjects` the originating subject tag. Instances
    are immutable after construction and safe to share across readers.
    """

    def __init__(self, values: np.ndarray, labels: np.ndarray,
                 subjects: Sequence[str] | np.ndarray, num_classes: int):
        values = np.ascontiguousarray(values, dtype=np.float64)
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        subjects = np.asarray(subjects, dtype=object)
        if values.ndim != 2:
            raise ValueError("values must be 2-D [n_windows, window_len]")
        n = values.shape[0]
        if labels.shape != (n,) or subjects.shape != (n,):
            raise ValueError("labels/subjects length must match number of windows")
        if num_classes not in (2, 3):
            raise ValueError(f"num_classes must be 2 or 3, got {num_classes}")
        if n and (labels.min() < 0 or labels.max() >= num_classes):
            raise ValueError("labels must lie in [0, num_classes)")
        if n and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("window values must lie in [0, 1]; normalize before segmenting")
        self.values = _readonly(values)
        self.labels = _readonly(labels)
        self.subjects = _readonly(subjects)
        self.num_classes = num_classes

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def window_len(self) -> int:
        return self.values.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def subject_tags(self) -> list[str]:
        """Distinct subject tags in first-appearance order."""
        seen: dict[str, None] = {}
        for s in self.subjects:
            seen.setdefault(s)
        return list(seen)

    def subset(self, indices: np.ndarray) -> "WindowedDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return WindowedDataset(self.values[idx], self.labels[idx],
                               self.subjects[idx], self.num_classes)

    def for_subject(self, tag: str) -> "WindowedDataset":
        return self.subset(np.flatnonzero(self.subjects == tag))

    def without_subject(self, tag: str) -> "WindowedDataset":
        return self.subset(np.flatnonzero(self.subjects != tag))

    def __getitem__(self, i: int) -> EdaWindow:
        return EdaWindow(self.values[i], int(self.labels[i]), str(self.subjects[i]))

    def __iter__(self) -> Iterator[EdaWindow]:
        for i in range(len(self)):
            yield self[i]

    @staticmethod
    def concat(parts: Sequence["WindowedDataset"]) -> "WindowedDataset":
        if not parts:
            raise ValueError("cannot concatenate zero datasets")
        num_classes = parts[0].num_classes
        width = parts[0].window_len
        for p in parts[1:]:
            if p.num_classes != num_classes or p.window_len != width:
                raise ValueError("datasets disagree on num_classes or window length")
        return WindowedDataset(
            np.concatenate([p.values for p in parts]),
            np.concatenate([p.labels for p in parts]),
            np.concatenate([p.subjects for p in parts]),
            num_classes,
        )


def load_recording(path: str | Path, subject_id: str) -> EdaRecording:
    """Parse a neutral subject CSV (header ``eda_uS,label``) into a recording."""
    path = Path(path)
    samples: list[float] = []
    codes: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != list(CSV_HEADER):
            raise CsvFormatError(f"{path}: line 1: expected header 'eda_uS,label', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise CsvFormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                value = float(row[0])
                code = int(row[1])
            except ValueError:
                raise CsvFormatError(f"{path}: line {lineno}: malformed row {','.join(row)!r}") from None
            if not np.isfinite(value):
                raise CsvFormatError(f"{path}: line {lineno}: non-finite eda_uS value {row[0]!r}")
            if not 0 <= code <= 7:
                raise CsvFormatError(f"{path}: line {lineno}: label {code} outside WESAD coding 0-7")
            samples.append(value)
            codes.append(code)
    if not samples:
        raise CsvFormatError(f"{path}: no data rows")
    return EdaRecording(subject_id, np.array(samples), np.array(codes))


def _subject_sort_key(tag: str):
    m = re.fullmatch(r"S(\d+)", tag)
    return (0, int(m.group(1))) if m else (1, tag)


def load_corpus(data_dir: str | Path) -> list[EdaRecording]:
    """Load every S<id>.csv in a directory, in natural subject order."""
    data_dir = Path(data_dir)
    paths = sorted(data_dir.glob("S*.csv"), key=lambda p: _subject_sort_key(p.stem))
    if not paths:
        raise FileNotFoundError(f"no S*.csv subject files found in {data_dir}")
    return [load_recording(p, p.stem) for p in paths]


def write_recording_csv(rec: EdaRecording, path: str | Path) -> None:
    """Write a recording in the neutral CSV format; floats keep full precision."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for value, code in zip(rec.samples.tolist(), rec.condition_codes.tolist()):
            fh.write(f"{value!r},{code}\n")


def min_max_normalize(rec: EdaRecording) -> EdaRecording:
    """Rescale the whole recording to [0, 1]; constant signals are rejected."""
    lo = float(rec.samples.min())
    hi = float(rec.samples.max())
    if hi == lo:
        raise DegenerateSignalError(
            f"recording {rec.subject_id} is constant ({lo} uS); unusable sensor data")
    scaled = (rec.samples - lo) / (hi - lo)
    return EdaRecording(rec.subject_id, scaled, rec.condition_codes)


def _condition_runs(codes: np.ndarray) -> Iterator[tuple[int, int, int]]:
    """Yield (start, stop, code) for each maximal same-code run."""
    if len(codes) == 0:
        return
    boundaries = np.flatnonzero(np.diff(codes) != 0) + 1
    starts = np.concatenate(([0], boundaries))
    stops = np.concatenate((boundaries, [len(codes)]))
    for start, stop in zip(starts, stops):
        yield int(start), int(stop), int(codes[start])


def segment(rec: EdaRecording, cfg: PipelineConfig = PipelineConfig()) -> WindowedDataset:
    """Cut overlapping windows inside contiguous same-condition runs.

    Windows never cross a condition boundary; runs shorter than one window
    contribute nothing, and codes outside {1, 2, 3} are skipped entirely.
    """
    if len(rec) and (rec.samples.min() < 0.0 or rec.samples.max() > 1.0):
        raise ValueError(f"recording {rec.subject_id} is not normalized to [0, 1]")
    win = cfg.window_len_samples
    hop = cfg.hop_samples
    chunks: list[np.ndarray] = []
    labels: list[int] = []
    for start, stop, code in _condition_runs(rec.condition_codes):
        if code not in CODE_TO_CLASS:
            continue
        run_len = stop - start
        if run_len < win:
            continue
        label = CODE_TO_CLASS[code]
        for offset in range(0, run_len - win + 1, hop):
            chunks.append(rec.samples[start + offset:start + offset + win])
            labels.append(label)
    values = np.array(chunks, dtype=np.float64) if chunks else np.empty((0, win))
    return WindowedDataset(values, np.array(labels, dtype=np.int64),
                           np.array([rec.subject_id] * len(labels), dtype=object), 3)


def build_corpus(recordings: Sequence[EdaRecording],
                 cfg: PipelineConfig = PipelineConfig()) -> WindowedDataset:
    """Normalize each subject over its full recording, then segment and pool."""
    return WindowedDataset.concat([segment(min_max_normalize(r), cfg) for r in recordings])


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _allocate_stratified(counts: np.ndarray, total_target: int) -> np.ndarray:
    """Largest-remainder allocation of `total_target` across classes, proportional to counts."""
    n = counts.sum()
    exact = counts * (total_target / n)
    alloc = np.floor(exact).astype(np.int64)
    remainder = exact - alloc
    shortfall = total_target - int(alloc.sum())
    for cls in np.argsort(-remainder, kind="stable")[:shortfall]:
        alloc[cls] += 1
    return alloc


def make_split(ds: WindowedDataset, train_fraction: float,
               seed: int) -> tuple[WindowedDataset, WindowedDataset]:
    """Stratified random split; train gets round(train_fraction * len(ds)) windows."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    counts = ds.class_counts()
    train_total = _round_half_up(train_fraction * len(ds))
    alloc = _allocate_stratified(counts, train_total)
    for cls in range(ds.num_classes):
        if alloc[cls] < 1 or alloc[cls] >= counts[cls]:
            raise StratificationError(
                f"class {cls} has {counts[cls]} windows; cannot place it in both halves "
                f"at fraction {train_fraction}")
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for cls in range(ds.num_classes):
        members = rng.permutation(np.flatnonzero(ds.labels == cls))
        train_idx.append(members[:alloc[cls]])
        test_idx.append(members[alloc[cls]:])
    train = rng.permutation(np.concatenate(train_idx))
    test = rng.permutation(np.concatenate(test_idx))
    return ds.subset(train), ds.subset(test)


def kfold(ds: WindowedDataset, k: int, seed: int) -> list[tuple[WindowedDataset, WindowedDataset]]:
    """Stratified k-fold partition; validation folds are disjoint and exhaust ds."""
    if k < 2:
        raise ValueError("k must be >= 2")
    counts = ds.class_counts()
    for cls, count in enumerate(counts):
        if count < k:
            raise ValueError(f"class {cls} has only {count} windows; cannot make {k} folds")
    rng = np.random.default_rng(seed)
    fold_members: list[list[np.ndarray]] = [[] for _ in range(k)]
    offset = 0
    for cls in range(ds.num_classes):
        members = rng.permutation(np.flatnonzero(ds.labels == cls))
        base, extra = divmod(len(members), k)
        # rotate which folds absorb the remainder so fold sizes stay within 1
        sizes = [base + (1 if (i - offset) % k < extra else 0) for i in range(k)]
        offset += extra
        pos = 0
        for i, size in enumerate(sizes):
            fold_members[i].append(members[pos:pos + size])
            pos += size
    folds = []
    for i in range(k):
        val_idx = np.concatenate(fold_members[i])
        mask = np.ones(len(ds), dtype=bool)
        mask[val_idx] = False
        folds.append((ds.subset(np.flatnonzero(mask)), ds.subset(val_idx)))
    return folds

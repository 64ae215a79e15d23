"""Synthetic EDA subject generator for data-free testing.

Each subject is a contiguous baseline / stress / amusement recording built
from a per-subject tonic level, a slow mean-reverting drift, and randomly
timed phasic peaks (instant rise, exponential decay). Stress raises the
tonic level and peak rate, amusement sits in between, so the three classes
are separable by construction. A "shifted" profile inverts the stress tonic
response to mimic a subject the population model will misread.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace, asdict

import numpy as np

from .pipeline import (
    CODE_AMUSEMENT,
    CODE_BASELINE,
    CODE_STRESS,
    SAMPLING_RATE_HZ,
    EdaRecording,
)


@dataclass(frozen=True)
class GeneratorProfile:
    """Key-value generator parameters: durations in seconds, tonic levels in uS, peak rates per second."""

    baseline_seconds: float = 1200.0
    stress_seconds: float = 600.0
    amusement_seconds: float = 390.0
    baseline_tonic: float = 1.2
    tonic_jitter: float = 0.3
    stress_tonic_shift: float = 1.0
    amusement_tonic_shift: float = 0.25
    baseline_peak_rate: float = 0.008
    stress_peak_rate: float = 0.12
    amusement_peak_rate: float = 0.05
    peak_amplitude: float = 0.5
    peak_decay_seconds: float = 4.0
    drift_step: float = 0.006
    drift_reversion: float = 0.995
    noise_std: float = 0.02

    def __post_init__(self):
        for name in ("baseline_seconds", "stress_seconds", "amusement_seconds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def shifted(self) -> "GeneratorProfile":
        """Variant whose stress response drops below baseline instead of rising."""
        return replace(self, stress_tonic_shift=-0.7, stress_peak_rate=0.05)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorProfile":
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown generator profile keys: {sorted(unknown)}")
        return cls(**data)


def _render_condition(rng: np.random.Generator, n: int, level: float,
                      peak_rate: float, profile: GeneratorProfile) -> np.ndarray:
    fs = SAMPLING_RATE_HZ
    drift = np.empty(n)
    d = 0.0
    steps = rng.normal(0.0, profile.drift_step, size=n)
    for i in range(n):
        d = profile.drift_reversion * d + steps[i]
        drift[i] = d
    signal = level + drift
    n_peaks = rng.poisson(peak_rate * n / fs)
    onsets = np.sort(rng.integers(0, n, size=n_peaks))
    amps = rng.exponential(profile.peak_amplitude, size=n_peaks)
    decay = np.exp(-np.arange(int(5 * profile.peak_decay_seconds * fs)) /
                   (profile.peak_decay_seconds * fs))
    for onset, amp in zip(onsets, amps):
        tail = min(len(decay), n - onset)
        signal[onset:onset + tail] += amp * decay[:tail]
    signal += rng.normal(0.0, profile.noise_std, size=n)
    return np.maximum(signal, 0.01)


def synth_subject(seed: int, profile: GeneratorProfile | None = None,
                  subject_id: str = "S0") -> EdaRecording:
    """Generate one subject: baseline, then stress, then amusement runs."""
    profile = profile or GeneratorProfile()
    rng = np.random.default_rng(seed)
    fs = SAMPLING_RATE_HZ
    tonic = profile.baseline_tonic + rng.normal(0.0, profile.tonic_jitter)
    tonic = max(tonic, 0.2)
    plan = (
        (CODE_BASELINE, profile.baseline_seconds, 0.0, profile.baseline_peak_rate),
        (CODE_STRESS, profile.stress_seconds, profile.stress_tonic_shift, profile.stress_peak_rate),
        (CODE_AMUSEMENT, profile.amusement_seconds, profile.amusement_tonic_shift, profile.amusement_peak_rate),
    )
    pieces = []
    codes = []
    for code, seconds, shift, rate in plan:
        n = int(round(seconds * fs))
        pieces.append(_render_condition(rng, n, tonic + shift, rate, profile))
        codes.append(np.full(n, code, dtype=np.int64))
    return EdaRecording(subject_id, np.concatenate(pieces), np.concatenate(codes))


def default_subject_tags(n_subjects: int) -> list[str]:
    """S2, S3, ... skipping S12, mirroring the WESAD subject numbering."""
    ids = (i for i in itertools.count(2) if i != 12)
    return [f"S{i}" for i in itertools.islice(ids, n_subjects)]


def synth_corpus(n_subjects: int, seed: int,
                 profile: GeneratorProfile | None = None,
                 shifted_subjects: tuple[str, ...] = ()) -> list[EdaRecording]:
    """Generate a corpus; subjects named in `shifted_subjects` use the shifted profile."""
    profile = profile or GeneratorProfile()
    unknown = set(shifted_subjects) - set(default_subject_tags(n_subjects))
    if unknown:
        raise ValueError(f"shifted subjects not in corpus: {sorted(unknown)}")
    recordings = []
    for i, tag in enumerate(default_subject_tags(n_subjects)):
        p = profile.shifted() if tag in shifted_subjects else profile
        recordings.append(synth_subject(seed + i, p, subject_id=tag))
    return recordings

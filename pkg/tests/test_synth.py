import numpy as np
import pytest

from edastress import (
    GeneratorProfile,
    default_subject_tags,
    min_max_normalize,
    segment,
    synth_corpus,
    synth_subject,
)


class TestSynthSubject:
    def test_default_duration_is_8760_samples(self):
        rec = synth_subject(0)
        assert len(rec) == 8760  # (1200 + 600 + 390) s at 4 Hz

    def test_deterministic_per_seed(self):
        a = synth_subject(123)
        b = synth_subject(123)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.condition_codes, b.condition_codes)

    def test_different_seeds_differ(self):
        assert not np.array_equal(synth_subject(1).samples, synth_subject(2).samples)

    def test_stress_mean_above_baseline_mean(self):
        for seed in range(8):
            rec = synth_subject(seed)
            stress = rec.samples[rec.condition_codes == 2]
            baseline = rec.samples[rec.condition_codes == 1]
            assert stress.mean() > baseline.mean(), f"seed {seed}"

    def test_codes_are_contiguous_runs(self):
        rec = synth_subject(4)
        changes = np.flatnonzero(np.diff(rec.condition_codes) != 0)
        assert len(changes) == 2  # baseline -> stress -> amusement
        assert sorted(set(rec.condition_codes.tolist())) == [1, 2, 3]

    def test_custom_durations(self):
        profile = GeneratorProfile(baseline_seconds=100, stress_seconds=50,
                                   amusement_seconds=25)
        rec = synth_subject(0, profile)
        assert len(rec) == (100 + 50 + 25) * 4

    def test_nonpositive_duration_rejected(self):
        with pytest.raises(ValueError):
            GeneratorProfile(stress_seconds=0)

    def test_segments_cleanly(self):
        ds = segment(min_max_normalize(synth_subject(9, subject_id="S4")))
        assert ds.class_counts().tolist() == [39, 19, 12]
        assert ds.subject_tags() == ["S4"]


class TestShiftedProfile:
    def test_shifted_stress_sits_below_baseline(self):
        rec = synth_subject(3, GeneratorProfile().shifted())
        stress = rec.samples[rec.condition_codes == 2]
        baseline = rec.samples[rec.condition_codes == 1]
        assert stress.mean() < baseline.mean()

    def test_dict_round_trip(self):
        profile = GeneratorProfile().shifted()
        assert GeneratorProfile.from_dict(profile.to_dict()) == profile

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            GeneratorProfile.from_dict({"peak_velocity": 3})


class TestCorpus:
    def test_subject_tags_mirror_wesad(self):
        assert default_subject_tags(15) == [
            "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9", "S10", "S11",
            "S13", "S14", "S15", "S16", "S17"]

    def test_corpus_deterministic(self):
        a = synth_corpus(3, seed=5)
        b = synth_corpus(3, seed=5)
        for ra, rb in zip(a, b):
            assert ra.subject_id == rb.subject_id
            assert np.array_equal(ra.samples, rb.samples)

    def test_shifted_subject_applied(self):
        recs = synth_corpus(4, seed=5, shifted_subjects=("S3",))
        by_tag = {r.subject_id: r for r in recs}
        shifted = by_tag["S3"]
        stress = shifted.samples[shifted.condition_codes == 2]
        baseline = shifted.samples[shifted.condition_codes == 1]
        assert stress.mean() < baseline.mean()

    def test_unknown_shifted_subject_rejected(self):
        with pytest.raises(ValueError, match="S99"):
            synth_corpus(3, seed=0, shifted_subjects=("S99",))

import numpy as np
import pytest

from edastress import compute_metrics, confusion_matrix, metrics_from_confusion


def naive_metrics(preds, labels, num_classes):
    """Per-sample counting oracle, no confusion matrix involved."""
    n = len(labels)
    accuracy = sum(1 for p, t in zip(preds, labels) if p == t) / n if n else 0.0
    per_class = []
    for c in range(num_classes):
        tp = sum(1 for p, t in zip(preds, labels) if p == c and t == c)
        fp = sum(1 for p, t in zip(preds, labels) if p == c and t != c)
        fn = sum(1 for p, t in zip(preds, labels) if p != c and t == c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_class.append((precision, recall))
    return accuracy, per_class


class TestConfusionMatrix:
    def test_perfect_predictions_are_diagonal(self):
        labels = [0, 1, 2, 1, 0]
        mat = confusion_matrix(labels, labels, 3)
        assert np.array_equal(mat, np.diag([2, 2, 1]))

    def test_hand_example(self):
        mat = confusion_matrix([1, 1], [0, 1], 2)
        assert mat.tolist() == [[0, 1], [0, 1]]

    def test_empty_input_gives_zero_matrix(self):
        assert confusion_matrix([], [], 3).tolist() == [[0] * 3] * 3

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            confusion_matrix([0, 1], [0], 2)

    def test_out_of_range_id(self):
        with pytest.raises(ValueError, match="class ids"):
            confusion_matrix([0, 2], [0, 1], 2)

    def test_row_sums_are_true_class_counts(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 3, size=200)
        preds = rng.integers(0, 3, size=200)
        mat = confusion_matrix(preds, labels, 3)
        assert mat.sum() == 200
        assert np.array_equal(mat.sum(axis=1), np.bincount(labels, minlength=3))


class TestMetrics:
    def test_binary_positive_class_hand_example(self):
        # rows = true, cols = predicted; stress (class 1) is the positive class
        m = metrics_from_confusion(np.array([[50, 10], [5, 35]]))
        assert abs(m.precision - 35 / 45) < 1e-12
        assert abs(m.recall - 35 / 40) < 1e-12
        assert abs(m.f1 - 2 * (35 / 45) * (35 / 40) / (35 / 45 + 35 / 40)) < 1e-12
        assert abs(m.f1 - 0.8235294117647058) < 1e-12
        assert abs(m.accuracy - 85 / 100) < 1e-12
        assert m.averaging == "positive_class"

    def test_all_correct(self):
        m = compute_metrics([0, 1, 1, 0], [0, 1, 1, 0], 2)
        assert m.accuracy == 1.0
        assert np.array_equal(m.confusion, np.diag([2, 2]))
        off_diag = m.confusion - np.diag(np.diag(m.confusion))
        assert np.all(off_diag == 0)

    def test_macro_precision_is_mean_of_per_class(self):
        rng = np.random.default_rng(1)
        preds = rng.integers(0, 3, size=120)
        labels = rng.integers(0, 3, size=120)
        m = compute_metrics(preds, labels, 3)
        assert abs(m.macro_precision - np.mean([c.precision for c in m.per_class])) < 1e-12
        assert m.averaging == "macro"
        assert m.precision == m.macro_precision

    def test_headline_f1_is_harmonic_mean(self):
        rng = np.random.default_rng(2)
        for num_classes in (2, 3):
            preds = rng.integers(0, num_classes, size=80)
            labels = rng.integers(0, num_classes, size=80)
            m = compute_metrics(preds, labels, num_classes)
            if m.precision + m.recall == 0:
                assert m.f1 == 0.0
            else:
                expected = 2 * m.precision * m.recall / (m.precision + m.recall)
                assert abs(m.f1 - expected) < 1e-12

    def test_f1_zero_when_precision_and_recall_zero(self):
        # predict only class 0 while all true labels are class 1
        m = compute_metrics([0, 0, 0], [1, 1, 1], 2)
        assert m.precision == 0.0 and m.recall == 0.0 and m.f1 == 0.0

    def test_matches_naive_counting_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(150):
            num_classes = int(rng.integers(2, 4))
            n = int(rng.integers(1, 60))
            preds = rng.integers(0, num_classes, size=n)
            labels = rng.integers(0, num_classes, size=n)
            m = compute_metrics(preds, labels, num_classes)
            accuracy, per_class = naive_metrics(preds.tolist(), labels.tolist(), num_classes)
            assert m.accuracy == accuracy
            for c, (precision, recall) in enumerate(per_class):
                assert m.per_class[c].precision == precision
                assert m.per_class[c].recall == recall

    def test_confusion_sum_and_trace_invariants(self):
        rng = np.random.default_rng(4)
        preds = rng.integers(0, 2, size=77)
        labels = rng.integers(0, 2, size=77)
        m = compute_metrics(preds, labels, 2)
        assert m.confusion.sum() == 77
        assert m.accuracy == np.trace(m.confusion) / m.confusion.sum()

    def test_to_dict_is_json_ready(self):
        import json
        m = compute_metrics([0, 1], [0, 1], 2)
        doc = json.dumps(m.to_dict())
        assert "accuracy" in doc

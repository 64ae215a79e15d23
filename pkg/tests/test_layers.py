import numpy as np
import pytest

from edastress import layers


def brute_force_conv(x, w, b):
    """Sliding dot product straight from the definition."""
    c_out, c_in, k = w.shape
    length = x.shape[1]
    out = np.empty((c_out, length - k + 1))
    for f in range(c_out):
        for i in range(length - k + 1):
            acc = b[f]
            for c in range(c_in):
                for j in range(k):
                    acc += x[c, i + j] * w[f, c, j]
            out[f, i] = acc
    return out


class TestConv1d:
    def test_hand_example(self):
        x = np.array([[1.0, 2.0, 3.0, 4.0]])
        w = np.array([[[1.0, 0.0, -1.0]]])
        b = np.zeros(1)
        assert layers.conv1d_forward(x, w, b).tolist() == [[-2.0, -2.0]]

    def test_identity_kernel(self):
        x = np.random.default_rng(0).random((3, 17))
        w = np.eye(3)[:, :, None]  # K=1, each filter copies one channel
        out = layers.conv1d_forward(x, w, np.zeros(3))
        assert np.array_equal(out, x)

    def test_bias_only(self):
        x = np.random.default_rng(1).random((1, 240))
        w = np.zeros((4, 1, 5))
        b = np.full(4, 0.7)
        out = layers.conv1d_forward(x, w, b)
        assert out.shape == (4, 236)
        assert np.allclose(out, 0.7, atol=0, rtol=0)

    def test_length_shorter_than_kernel(self):
        with pytest.raises(ValueError, match="shorter"):
            layers.conv1d_forward(np.zeros((1, 3)), np.zeros((1, 1, 5)), np.zeros(1))

    def test_channel_mismatch(self):
        with pytest.raises(ValueError, match="channel"):
            layers.conv1d_forward(np.zeros((2, 9)), np.zeros((1, 3, 2)), np.zeros(1))

    def test_matches_brute_force_random_cases(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            k = int(rng.integers(1, 12))
            length = int(rng.integers(k, k + 40))
            c_in = int(rng.integers(1, 4))
            c_out = int(rng.integers(1, 5))
            x = rng.standard_normal((c_in, length))
            w = rng.standard_normal((c_out, c_in, k))
            b = rng.standard_normal(c_out)
            fast = layers.conv1d_forward(x, w, b)
            slow = brute_force_conv(x, w, b)
            assert fast.shape == (c_out, length - k + 1)
            assert np.max(np.abs(fast - slow)) <= 1e-12

    def test_batch_backward_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        xl = rng.standard_normal((2, 9, 3))
        wk = rng.standard_normal((4, 3, 5))
        b = rng.standard_normal(5)
        dy = rng.standard_normal((2, 6, 5))

        dx, dw, db = layers.conv1d_batch_backward(xl, wk, dy)
        eps = 1e-6

        def scalar_loss():
            return float((layers.conv1d_batch(xl, wk, b) * dy).sum())

        for arr, grad in ((xl, dx), (wk, dw)):
            flat = arr.ravel()
            gflat = grad.ravel()
            for i in range(0, flat.size, 7):
                orig = flat[i]
                flat[i] = orig + eps
                up = scalar_loss()
                flat[i] = orig - eps
                down = scalar_loss()
                flat[i] = orig
                assert abs((up - down) / (2 * eps) - gflat[i]) < 1e-6
        assert np.allclose(db, dy.sum(axis=(0, 1)))


class TestRelu:
    def test_definition(self):
        assert layers.relu(np.array([-1.0, 0.0, 2.0])).tolist() == [0.0, 0.0, 2.0]

    def test_all_negative(self):
        assert np.all(layers.relu(-np.random.default_rng(0).random(20)) == 0.0)

    def test_idempotent(self):
        x = np.random.default_rng(1).standard_normal(50)
        assert np.array_equal(layers.relu(layers.relu(x)), layers.relu(x))


class TestGlobalMaxPool:
    def test_definition(self):
        out = layers.global_max_pool(np.array([[1.0, 5.0, 3.0], [2.0, 2.0, 2.0]]))
        assert out.tolist() == [5.0, 2.0]

    def test_single_column(self):
        x = np.array([[4.0], [7.0]])
        assert layers.global_max_pool(x).tolist() == [4.0, 7.0]

    def test_empty_axis_rejected(self):
        with pytest.raises(ValueError):
            layers.global_max_pool(np.zeros((3, 0)))

    def test_gradient_routes_to_argmax_only(self):
        x = np.array([[[0.1, 0.9], [0.9, 0.2], [0.3, 0.3]]])  # [1, L=3, C=2]
        pooled, idx = layers.global_max_pool_batch(x)
        assert pooled.tolist() == [[0.9, 0.9]]
        dx = layers.global_max_pool_batch_backward(x.shape, idx, np.ones((1, 2)))
        assert dx[0].tolist() == [[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]]

    def test_tie_goes_to_first_index(self):
        x = np.array([[[2.0], [2.0], [1.0]]])  # tie at positions 0 and 1
        _, idx = layers.global_max_pool_batch(x)
        assert idx.tolist() == [[0]]


class TestDense:
    def test_identity_matrix(self):
        out = layers.dense_forward(np.array([1.0, 2.0]), np.eye(2), np.zeros(2))
        assert out.tolist() == [1.0, 2.0]

    def test_zero_input_returns_bias(self):
        b = np.array([0.3, -0.1, 4.0])
        out = layers.dense_forward(np.zeros(5), np.ones((5, 3)), b)
        assert out.tolist() == b.tolist()

    def test_hand_product(self):
        out = layers.dense_forward(np.array([1.0, 1.0]),
                                   np.array([[2.0, 3.0], [4.0, 5.0]]),
                                   np.array([1.0, 1.0]))
        assert out.tolist() == [7.0, 9.0]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            layers.dense_forward(np.zeros(4), np.zeros((5, 2)), np.zeros(2))


class TestDropout:
    def test_inference_is_identity(self):
        x = np.random.default_rng(0).random(100)
        assert layers.dropout_apply(x, 0.3, training=False) is x

    def test_zero_rate_is_identity(self):
        x = np.random.default_rng(0).random(100)
        out = layers.dropout_apply(x, 0.0, training=True,
                                   rng=np.random.default_rng(1))
        assert np.array_equal(out, x)

    def test_inverted_scaling_preserves_mean(self):
        x = np.ones(100_000)
        out = layers.dropout_apply(x, 0.5, training=True,
                                   rng=np.random.default_rng(2))
        assert abs(out.mean() - 1.0) < 0.02
        survivors = out[out != 0]
        assert np.allclose(survivors, 2.0)

    def test_deterministic_per_stream(self):
        x = np.random.default_rng(0).random(1000)
        a = layers.dropout_apply(x, 0.3, True, np.random.default_rng(9))
        b = layers.dropout_apply(x, 0.3, True, np.random.default_rng(9))
        assert np.array_equal(a, b)

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            layers.dropout_apply(np.zeros(3), 1.0, training=True,
                                 rng=np.random.default_rng(0))

    def test_training_without_rng_rejected(self):
        with pytest.raises(ValueError, match="rng"):
            layers.dropout_apply(np.zeros(3), 0.5, training=True)


class TestSoftmaxCrossEntropy:
    def test_symmetric_logits(self):
        loss, grad = layers.softmax_cross_entropy(np.array([0.0, 0.0]), 0)
        assert abs(loss - np.log(2.0)) < 1e-12
        assert np.allclose(grad, [0.5 - 1.0, 0.5])

    def test_extreme_logits_stable(self):
        loss, grad = layers.softmax_cross_entropy(np.array([1000.0, 0.0]), 0)
        assert loss == 0.0
        assert grad[0] == 0.0
        assert np.all(np.abs(grad) < 1e-300)  # subnormal floor, never negative loss
        assert np.all(np.isfinite(grad))

    def test_three_class_example(self):
        loss, _ = layers.softmax_cross_entropy(np.array([1.0, 2.0, 3.0]), 2)
        expected = np.log(np.exp(1.0) + np.exp(2.0) + np.exp(3.0)) - 3.0
        assert abs(loss - expected) < 1e-12
        assert abs(loss - 0.40761) < 5e-6

    def test_probabilities_sum_to_one_and_positive(self):
        rng = np.random.default_rng(3)
        for scale in (1.0, 100.0, 1000.0):
            p = layers.softmax(rng.standard_normal(5) * scale)
            assert abs(p.sum() - 1.0) < 1e-9
            assert np.all(p > 0.0)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            layers.softmax_cross_entropy(np.zeros(3), 3)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            layers.softmax_cross_entropy(np.zeros(1), 0)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(4)
        logits = rng.standard_normal((6, 3))
        labels = rng.integers(0, 3, size=6)
        mean_loss, grad = layers.softmax_cross_entropy_batch(logits, labels)
        singles = [layers.softmax_cross_entropy(logits[i], int(labels[i]))
                   for i in range(6)]
        assert abs(mean_loss - np.mean([s[0] for s in singles])) < 1e-12
        assert np.allclose(grad, np.stack([s[1] for s in singles]) / 6, atol=1e-15)

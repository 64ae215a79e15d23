import numpy as np
import pytest

from edastress import ModelConfig, adam_step, init_adam, init_model, init_sgd, sgd_step
from edastress.network import ModelParams


def zero_grads(params) -> ModelParams:
    return ModelParams(**{name: np.zeros_like(arr) for name, arr in params.items()})


def tiny_params():
    cfg = ModelConfig(num_classes=2, input_len=20, conv1_filters=2, conv1_kernel=3,
                      conv2_filters=2, conv2_kernel=3, dense1_units=4, dense2_units=3)
    return init_model(cfg, seed=0)


class TestAdam:
    def test_first_step_closed_form(self):
        params = tiny_params()
        params.out_b = np.array([1.0, 0.0])
        grads = zero_grads(params)
        grads.out_b = np.array([0.5, 0.0])
        state = init_adam(params, lr=0.001)
        new_params, new_state = adam_step(params, grads, state)
        # bias-corrected first step: 1.0 - lr * 0.5/sqrt(0.25)
        assert abs(new_params.out_b[0] - 0.999) < 1e-9
        assert new_params.out_b[1] == 0.0
        assert new_state.t == 1

    def test_zero_gradient_leaves_params_unchanged(self):
        params = tiny_params()
        state = init_adam(params)
        current = params
        for _ in range(5):
            current, state = adam_step(current, zero_grads(params), state)
        for name, arr in current.items():
            assert np.array_equal(arr, getattr(params, name)), name
        assert state.t == 5

    def test_first_step_magnitude_is_lr_regardless_of_scale(self):
        for grad_value in (100.0, 0.01):
            params = tiny_params()
            grads = zero_grads(params)
            grads.dense1_b = np.full_like(params.dense1_b, grad_value)
            new_params, _ = adam_step(params, grads, init_adam(params, lr=0.001))
            moved = params.dense1_b - new_params.dense1_b
            assert np.allclose(moved, 0.001, rtol=1e-6), f"grad {grad_value}"

    def test_t_increments_by_one_per_step(self):
        params = tiny_params()
        state = init_adam(params)
        for expected in (1, 2, 3):
            params, state = adam_step(params, zero_grads(params), state)
            assert state.t == expected

    def test_non_finite_gradient_rejected(self):
        params = tiny_params()
        grads = zero_grads(params)
        grads.conv1_w = grads.conv1_w + np.nan
        with pytest.raises(FloatingPointError, match="conv1_w"):
            adam_step(params, grads, init_adam(params))

    def test_shape_mismatch_rejected(self):
        params = tiny_params()
        grads = zero_grads(params)
        grads.conv1_b = np.zeros(99)
        with pytest.raises(ValueError, match="conv1_b"):
            adam_step(params, grads, init_adam(params))

    def test_moment_shapes_mirror_params(self):
        params = tiny_params()
        grads = zero_grads(params)
        grads.out_w = np.ones_like(params.out_w)
        _, state = adam_step(params, grads, init_adam(params))
        for name, arr in params.items():
            assert getattr(state.m, name).shape == arr.shape
            assert getattr(state.v, name).shape == arr.shape

    def test_functional_step_leaves_inputs_untouched(self):
        params = tiny_params()
        before = params.copy()
        grads = zero_grads(params)
        grads.dense2_w = np.ones_like(params.dense2_w)
        adam_step(params, grads, init_adam(params))
        for name, arr in params.items():
            assert np.array_equal(arr, getattr(before, name)), name


class TestSgd:
    def test_plain_update(self):
        params = tiny_params()
        grads = zero_grads(params)
        grads.out_b = np.array([1.0, -2.0])
        new_params, state = sgd_step(params, grads, init_sgd(params, lr=0.1))
        assert np.allclose(new_params.out_b, params.out_b - 0.1 * grads.out_b)
        assert state.t == 1

    def test_non_finite_rejected(self):
        params = tiny_params()
        grads = zero_grads(params)
        grads.out_b = np.array([np.inf, 0.0])
        with pytest.raises(FloatingPointError):
            sgd_step(params, grads, init_sgd(params))

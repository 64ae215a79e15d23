"""The stress-classification CNN: two 1D conv layers (100 filters, kernels
5 and 10), global max pooling, dense 128 and 64 with dropout 0.3 / 0.2, and
a softmax output head. All math runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import layers


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int = 2
    input_len: int = 240
    conv1_filters: int = 100
    conv1_kernel: int = 5
    conv2_filters: int = 100
    conv2_kernel: int = 10
    dense1_units: int = 128
    dense2_units: int = 64
    dropout1: float = 0.3
    dropout2: float = 0.2

    def __post_init__(self):
        if self.num_classes not in (2, 3):
            raise ValueError("num_classes must be 2 or 3")
        if self.conv1_kernel < 1 or self.conv2_kernel < 1:
            raise ValueError("kernel sizes must be >= 1")
        if self.input_len <= self.conv1_kernel + self.conv2_kernel - 2:
            raise ValueError("input too short for two valid convolutions")
        for rate in (self.dropout1, self.dropout2):
            if not 0.0 <= rate < 1.0:
                raise ValueError("dropout rates must lie in [0, 1)")

    @property
    def conv1_out_len(self) -> int:
        return self.input_len - self.conv1_kernel + 1

    @property
    def conv2_out_len(self) -> int:
        return self.conv1_out_len - self.conv2_kernel + 1


@dataclass
class ModelParams:
    """All weights and biases; conv weights are [filters, in_channels, kernel],
    dense weights are [in, out]."""

    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    dense1_w: np.ndarray
    dense1_b: np.ndarray
    dense2_w: np.ndarray
    dense2_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def items(self):
        for f in fields(self):
            yield f.name, getattr(self, f.name)

    def copy(self) -> "ModelParams":
        return ModelParams(**{name: arr.copy() for name, arr in self.items()})

    def expected_shapes(self, cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
        return expected_shapes(cfg)


def expected_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    return {
        "conv1_w": (cfg.conv1_filters, 1, cfg.conv1_kernel),
        "conv1_b": (cfg.conv1_filters,),
        "conv2_w": (cfg.conv2_filters, cfg.conv1_filters, cfg.conv2_kernel),
        "conv2_b": (cfg.conv2_filters,),
        "dense1_w": (cfg.conv2_filters, cfg.dense1_units),
        "dense1_b": (cfg.dense1_units,),
        "dense2_w": (cfg.dense1_units, cfg.dense2_units),
        "dense2_b": (cfg.dense2_units,),
        "out_w": (cfg.dense2_units, cfg.num_classes),
        "out_b": (cfg.num_classes,),
    }


def init_model(cfg: ModelConfig, seed: int) -> ModelParams:
    """He-uniform weights for the ReLU layers, Glorot-uniform for the output
    head, zero biases; deterministic per seed."""
    rng = np.random.default_rng(seed)

    def he(shape, fan_in):
        limit = np.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, size=shape)

    def glorot(shape, fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    s = expected_shapes(cfg)
    return ModelParams(
        conv1_w=he(s["conv1_w"], fan_in=1 * cfg.conv1_kernel),
        conv1_b=np.zeros(s["conv1_b"]),
        conv2_w=he(s["conv2_w"], fan_in=cfg.conv1_filters * cfg.conv2_kernel),
        conv2_b=np.zeros(s["conv2_b"]),
        dense1_w=he(s["dense1_w"], fan_in=cfg.conv2_filters),
        dense1_b=np.zeros(s["dense1_b"]),
        dense2_w=he(s["dense2_w"], fan_in=cfg.dense1_units),
        dense2_b=np.zeros(s["dense2_b"]),
        out_w=glorot(s["out_w"], fan_in=cfg.dense2_units, fan_out=cfg.num_classes),
        out_b=np.zeros(s["out_b"]),
    )


@dataclass
class _ForwardCache:
    xl: np.ndarray          # [B, L, 1]
    z1: np.ndarray          # conv1 pre-activation [B, L1, F1]
    a1: np.ndarray          # post-ReLU
    z2: np.ndarray          # conv2 pre-activation [B, L2, F2]
    pool_idx: np.ndarray    # argmax positions [B, F2]
    pooled: np.ndarray      # [B, F2]
    h1: np.ndarray          # dense1 pre-activation
    o1: np.ndarray          # after ReLU + dropout
    mask1: np.ndarray
    h2: np.ndarray
    o2: np.ndarray
    mask2: np.ndarray


def _run_forward(params: ModelParams, x: np.ndarray, dropout_rates: tuple[float, float],
                 masks: tuple[np.ndarray, np.ndarray] | None,
                 rng: np.random.Generator | None) -> tuple[np.ndarray, _ForwardCache]:
    xl = np.ascontiguousarray(x[:, :, None])
    w1k = np.ascontiguousarray(params.conv1_w.transpose(2, 1, 0))
    w2k = np.ascontiguousarray(params.conv2_w.transpose(2, 1, 0))

    z1 = layers.conv1d_batch(xl, w1k, params.conv1_b)
    a1 = layers.relu(z1)
    z2 = layers.conv1d_batch(a1, w2k, params.conv2_b)
    a2 = layers.relu(z2)
    pooled, pool_idx = layers.global_max_pool_batch(a2)

    h1 = layers.dense_forward(pooled, params.dense1_w, params.dense1_b)
    r1 = layers.relu(h1)
    if masks is None:
        mask1 = layers.dropout_mask(r1.shape, dropout_rates[0], rng) if rng is not None \
            else np.ones(r1.shape)
    else:
        mask1 = masks[0]
    o1 = r1 * mask1

    h2 = layers.dense_forward(o1, params.dense2_w, params.dense2_b)
    r2 = layers.relu(h2)
    if masks is None:
        mask2 = layers.dropout_mask(r2.shape, dropout_rates[1], rng) if rng is not None \
            else np.ones(r2.shape)
    else:
        mask2 = masks[1]
    o2 = r2 * mask2

    logits = layers.dense_forward(o2, params.out_w, params.out_b)
    cache = _ForwardCache(xl, z1, a1, z2, pool_idx, pooled, h1, o1, mask1, h2, o2, mask2)
    return logits, cache


def forward_batch(params: ModelParams, x: np.ndarray, cfg: ModelConfig,
                  training: bool = False,
                  rng: np.random.Generator | None = None) -> tuple[np.ndarray, _ForwardCache]:
    """Logits for a batch x [B, input_len]. In training mode dropout masks are
    drawn from `rng` and kept in the returned cache for the paired backward."""
    if x.ndim != 2 or x.shape[1] != cfg.input_len:
        raise ValueError(f"expected input shape [batch, {cfg.input_len}], got {x.shape}")
    if training:
        if rng is None and (cfg.dropout1 > 0 or cfg.dropout2 > 0):
            raise ValueError("training-mode forward needs an rng for dropout")
        return _run_forward(params, x, (cfg.dropout1, cfg.dropout2), None, rng)
    return _run_forward(params, x, (0.0, 0.0), None, None)


def forward(params: ModelParams, window: np.ndarray, cfg: ModelConfig,
            training: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
    """Logits for one window of length cfg.input_len."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise ValueError("forward expects a single 1-D window")
    logits, _ = forward_batch(params, window[None, :], cfg, training, rng)
    return logits[0]


def backward_from_cache(params: ModelParams, cache: _ForwardCache,
                        dlogits: np.ndarray) -> ModelParams:
    """Exact gradients for every parameter given d(loss)/d(logits)."""
    w1k = np.ascontiguousarray(params.conv1_w.transpose(2, 1, 0))
    w2k = np.ascontiguousarray(params.conv2_w.transpose(2, 1, 0))

    d_out_w = cache.o2.T @ dlogits
    d_out_b = dlogits.sum(axis=0)
    do2 = dlogits @ params.out_w.T

    dh2 = layers.relu_backward(cache.h2, do2 * cache.mask2)
    d_dense2_w = cache.o1.T @ dh2
    d_dense2_b = dh2.sum(axis=0)
    do1 = dh2 @ params.dense2_w.T

    dh1 = layers.relu_backward(cache.h1, do1 * cache.mask1)
    d_dense1_w = cache.pooled.T @ dh1
    d_dense1_b = dh1.sum(axis=0)
    dpooled = dh1 @ params.dense1_w.T

    da2 = layers.global_max_pool_batch_backward(cache.z2.shape, cache.pool_idx, dpooled)
    dz2 = layers.relu_backward(cache.z2, da2)
    da1, dw2k, db2 = layers.conv1d_batch_backward(cache.a1, w2k, dz2)

    dz1 = layers.relu_backward(cache.z1, da1)
    _, dw1k, db1 = layers.conv1d_batch_backward(cache.xl, w1k, dz1)

    return ModelParams(
        conv1_w=np.ascontiguousarray(dw1k.transpose(2, 1, 0)), conv1_b=db1,
        conv2_w=np.ascontiguousarray(dw2k.transpose(2, 1, 0)), conv2_b=db2,
        dense1_w=d_dense1_w, dense1_b=d_dense1_b,
        dense2_w=d_dense2_w, dense2_b=d_dense2_b,
        out_w=d_out_w, out_b=d_out_b,
    )


def loss_and_grads(params: ModelParams, x: np.ndarray, labels: np.ndarray,
                   cfg: ModelConfig, training: bool = True,
                   rng: np.random.Generator | None = None
                   ) -> tuple[float, ModelParams, np.ndarray]:
    """Mean cross-entropy loss over the batch, its gradients, and the logits."""
    logits, cache = forward_batch(params, x, cfg, training, rng)
    loss, dlogits = layers.softmax_cross_entropy_batch(logits, labels)
    grads = backward_from_cache(params, cache, dlogits)
    return loss, grads, logits


def backward(params: ModelParams, window: np.ndarray, label: int, cfg: ModelConfig,
             training: bool = True,
             rng: np.random.Generator | None = None) -> tuple[float, ModelParams]:
    """Loss and gradients for one window, dropout masks shared with the
    internally paired forward pass."""
    window = np.asarray(window, dtype=np.float64)
    loss, grads, _ = loss_and_grads(params, window[None, :], np.array([label]),
                                    cfg, training, rng)
    return loss, grads

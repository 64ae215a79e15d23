"""Numeric building blocks for the 1D CNN: convolution, pooling, dense,
dropout, and softmax cross-entropy, each with an exact analytic backward.

Batched activations are stored channels-last ([batch, length, channels]) so
the convolutions reduce to accumulated GEMMs over contiguous views of the
batch flattened into one long signal; invalid positions that straddle sample
boundaries are computed and discarded, which is cheaper than padding.
Kernel weights are passed here as [kernel, in_channels, out_channels].
"""

from __future__ import annotations

import numpy as np


# ---------------------------------------------------------------------------
# convolution (cross-correlation, stride 1, valid padding)

def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Single-sample conv: x [C_in, L], w [C_out, C_in, K], b [C_out] -> [C_out, L-K+1]."""
    c_in, length = x.shape
    c_out, c_in_w, k = w.shape
    if c_in_w != c_in:
        raise ValueError(f"channel mismatch: input has {c_in}, kernel expects {c_in_w}")
    if length < k:
        raise ValueError(f"input length {length} shorter than kernel {k}")
    xl = np.ascontiguousarray(x.T)[None]                  # [1, L, C_in]
    wk = np.ascontiguousarray(w.transpose(2, 1, 0))       # [K, C_in, C_out]
    y = conv1d_batch(xl, wk, b)
    return y[0].T


def conv1d_batch(xl: np.ndarray, wk: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched conv: xl [B, L, C_in], wk [K, C_in, C_out] -> [B, L-K+1, C_out]."""
    n_batch, length, c_in = xl.shape
    k, _, c_out = wk.shape
    if length < k:
        raise ValueError(f"input length {length} shorter than kernel {k}")
    l_out = length - k + 1
    flat = xl.reshape(n_batch * length, c_in)
    t = n_batch * length - k + 1
    y = flat[0:t] @ wk[0]
    for j in range(1, k):
        y += flat[j:j + t] @ wk[j]
    full = np.empty((n_batch * length, c_out))
    full[:t] = y
    out = np.ascontiguousarray(full.reshape(n_batch, length, c_out)[:, :l_out, :])
    out += b
    return out


def conv1d_batch_backward(xl: np.ndarray, wk: np.ndarray,
                          dy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients for conv1d_batch: returns (dx [B,L,C_in], dw [K,C_in,C_out], db [C_out])."""
    n_batch, length, c_in = xl.shape
    k, _, c_out = wk.shape
    l_out = length - k + 1
    db = dy.sum(axis=(0, 1))

    # scatter dy into a zero-padded long buffer so cross-sample terms vanish
    dy_long = np.zeros((n_batch, length, c_out))
    dy_long[:, :l_out, :] = dy
    dy_flat = dy_long.reshape(n_batch * length, c_out)
    t = n_batch * length - k + 1
    flat = xl.reshape(n_batch * length, c_in)
    dw = np.empty_like(wk)
    for j in range(k):
        dw[j] = flat[j:j + t].T @ dy_flat[0:t]

    # dx is the full correlation of dy with the flipped kernel; k-1 leading
    # zeros align it, and the per-sample zero gaps prevent cross-talk
    padded = np.zeros((k - 1 + n_batch * length, c_out))
    padded[k - 1:] = dy_flat
    dx_flat = padded[0:n_batch * length] @ wk[k - 1].T
    for j in range(1, k):
        dx_flat += padded[j:j + n_batch * length] @ wk[k - 1 - j].T
    return dx_flat.reshape(n_batch, length, c_in), dw, db


# ---------------------------------------------------------------------------
# activations and pooling

def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(pre: np.ndarray, grad: np.ndarray) -> np.ndarray:
    return grad * (pre > 0.0)


def global_max_pool(x: np.ndarray) -> np.ndarray:
    """Per-channel max over time: x [C, L] -> [C]."""
    if x.ndim != 2 or x.shape[1] == 0:
        raise ValueError("global_max_pool expects a non-empty [C, L] array")
    return x.max(axis=1)


def global_max_pool_batch(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """x [B, L, C] -> (pooled [B, C], argmax [B, C]); ties go to the first index."""
    if x.shape[1] == 0:
        raise ValueError("cannot pool an empty time axis")
    idx = x.argmax(axis=1)
    pooled = np.take_along_axis(x, idx[:, None, :], axis=1)[:, 0, :]
    return pooled, idx


def global_max_pool_batch_backward(x_shape: tuple[int, ...], idx: np.ndarray,
                                   grad: np.ndarray) -> np.ndarray:
    dx = np.zeros(x_shape)
    np.put_along_axis(dx, idx[:, None, :], grad[:, None, :], axis=1)
    return dx


# ---------------------------------------------------------------------------
# dense

def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x [..., N] @ w [N, M] + b [M]; works on single vectors and batches alike."""
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"dense shape mismatch: input {x.shape[-1]} vs weight rows {w.shape[0]}")
    return x @ w + b


# ---------------------------------------------------------------------------
# dropout (inverted: scaled at train time, identity at inference)

def dropout_mask(shape: tuple[int, ...], rate: float, rng: np.random.Generator) -> np.ndarray:
    """Pre-scaled keep mask: entries are 0 or 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must lie in [0, 1)")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout_apply(x: np.ndarray, rate: float, training: bool,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    if not training or rate == 0.0:
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs an rng stream")
    return x * dropout_mask(x.shape, rate, rng)


# ---------------------------------------------------------------------------
# softmax cross-entropy

def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; safe for logits of magnitude 1e3.

    Entries whose true value underflows float64 are floored at the smallest
    subnormal so the output stays strictly positive; the sum is unaffected.
    """
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=-1, keepdims=True)
    return np.maximum(p, np.finfo(np.float64).smallest_subnormal)


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Loss -ln p[label] and gradient p - onehot(label) for one sample."""
    n_classes = logits.shape[0]
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if not 0 <= label < n_classes:
        raise ValueError(f"label {label} out of range for {n_classes} classes")
    p = softmax(logits)
    # log via the shifted logits to avoid log(0) underflow for extreme inputs
    shifted = logits - logits.max()
    loss = float(np.log(np.exp(shifted).sum()) - shifted[label])
    grad = p.copy()
    grad[label] -= 1.0
    return loss, grad


def softmax_cross_entropy_batch(logits: np.ndarray,
                                labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean loss over the batch and d(mean loss)/d(logits), shape [B, C]."""
    n_batch, n_classes = logits.shape
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise ValueError("label out of range")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    losses = log_z - shifted[np.arange(n_batch), labels]
    grad = softmax(logits)
    grad[np.arange(n_batch), labels] -= 1.0
    return float(losses.mean()), grad / n_batch

"""Dense float64 building blocks: products, Xavier init, activations, losses.

Every public function works on 2-D ``numpy.float64`` arrays stored row-major
with rows as samples, and is a pure function of its inputs.  Given finite
inputs, outputs are finite: softmax subtracts the row maximum and the
cross-entropy log is clamped, so nothing here overflows.

Randomness comes from numpy's PCG64 generator (``numpy.random.default_rng``),
so a given integer seed reproduces the identical stream on every platform.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ShapeError

# Probabilities below this are clamped before the cross-entropy log.
LOG_CLAMP = 1e-12

__all__ = [
    "LOG_CLAMP",
    "as_matrix",
    "matmul",
    "xavier_init",
    "relu",
    "relu_mask",
    "softmax_rows",
    "recon_loss",
    "recon_loss_grad",
    "ce_loss",
    "ce_logit_grad",
    "one_hot",
]


def as_matrix(x, name="array"):
    """Coerce ``x`` to a C-contiguous float64 2-D array or raise ShapeError."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def _require_same_shape(a, b, what):
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shapes {a.shape} and {b.shape} differ")


def matmul(a, b):
    """Matrix product ``a @ b`` with an explicit inner-dimension check."""
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def xavier_init(fan_in, fan_out, seed):
    """Xavier-uniform weight matrix of shape (fan_in, fan_out).

    Entries are i.i.d. uniform on [-L, L] with L = sqrt(6 / (fan_in + fan_out)).
    ``seed`` is anything ``numpy.random.default_rng`` accepts (an int or a
    ``SeedSequence``); the same seed always yields the same matrix.
    """
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan_in and fan_out must be >= 1, got ({fan_in}, {fan_out})")
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    rng = np.random.default_rng(seed)
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def relu(x):
    """Elementwise max(0, x)."""
    return np.maximum(x, 0.0)


def relu_mask(x):
    """0/1 ReLU derivative indicator; the derivative at exactly 0 is 0."""
    return (x > 0.0).astype(np.float64)


def softmax_rows(x):
    """Row-wise softmax, stabilized by subtracting each row's maximum."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def recon_loss(x, xhat):
    """Mean squared reconstruction error over all entries.

    The squared Frobenius norm of (x - xhat) divided by rows*cols; a
    size-normalized surrogate with the same minimizer as the plain
    Frobenius-norm objective, and a gradient scale independent of batch size.
    """
    _require_same_shape(x, xhat, "recon_loss")
    d = xhat - x
    return float(np.mean(d * d))


def recon_loss_grad(x, xhat):
    """Gradient of :func:`recon_loss` with respect to ``xhat``."""
    _require_same_shape(x, xhat, "recon_loss_grad")
    return 2.0 * (xhat - x) / x.size


def ce_loss(yhat, y_onehot):
    """Categorical cross-entropy, -(1/N) sum_i sum_k y_ik * log(yhat_ik).

    ``yhat`` rows are probability vectors, ``y_onehot`` rows one-hot.  The
    log argument is clamped at ``LOG_CLAMP`` so the loss is finite and
    nonnegative for any valid probability input.
    """
    _require_same_shape(yhat, y_onehot, "ce_loss")
    logp = np.log(np.maximum(yhat, LOG_CLAMP))
    return float(-np.sum(y_onehot * logp) / yhat.shape[0])


def ce_logit_grad(yhat, y_onehot):
    """Gradient of softmax + cross-entropy w.r.t. the pre-softmax logits.

    For softmax outputs ``yhat`` and one-hot targets this collapses to
    (yhat - y) / N.
    """
    _require_same_shape(yhat, y_onehot, "ce_logit_grad")
    return (yhat - y_onehot) / yhat.shape[0]


def one_hot(labels, n_classes):
    """Encode integer class ids as one-hot rows."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out

"""AdaDelta parameter updates, one state per weight matrix.

The recurrence is Zeiler's, augmented with a constant step multiplier ``lr``
because the training schedule prescribes different rates for the autoencoder
and supervised networks (0.5 or 0.3 vs 0.9), which pure AdaDelta has no knob
for.  Per step, elementwise:

    acc_grad   <- rho * acc_grad + (1 - rho) * g^2
    delta      <- -lr * sqrt(acc_update + eps) / sqrt(acc_grad + eps) * g
    acc_update <- rho * acc_update + (1 - rho) * delta^2
    param      <- param + delta

Both accumulators start at zero and stay nonnegative.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeError


class AdaDelta:
    """Optimizer state for a single parameter matrix.

    Parameters
    ----------
    shape : tuple
        Shape of the parameter this state will update.
    rho : float
        Accumulator decay, strictly inside (0, 1).
    eps : float
        Positive smoothing constant inside both square roots.
    lr : float
        Positive multiplier applied to the raw AdaDelta step.
    """

    def __init__(self, shape, rho=0.95, eps=1e-6, lr=1.0):
        if not 0.0 < rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {rho}")
        if eps <= 0.0:
            raise ValueError(f"eps must be > 0, got {eps}")
        if lr <= 0.0:
            raise ValueError(f"lr must be > 0, got {lr}")
        self.rho = float(rho)
        self.eps = float(eps)
        self.lr = float(lr)
        self.acc_grad = np.zeros(shape)
        self.acc_update = np.zeros(shape)

    def step(self, param, grad):
        """Advance the accumulators and return the updated parameter."""
        if param.shape != self.acc_grad.shape or grad.shape != self.acc_grad.shape:
            raise ShapeError(
                f"adadelta state has shape {self.acc_grad.shape}, got param "
                f"{param.shape} and grad {grad.shape}"
            )
        self.acc_grad = self.rho * self.acc_grad + (1.0 - self.rho) * grad * grad
        delta = (
            -self.lr
            * np.sqrt((self.acc_update + self.eps) / (self.acc_grad + self.eps))
            * grad
        )
        self.acc_update = self.rho * self.acc_update + (1.0 - self.rho) * delta * delta
        return param + delta

"""Pure-numpy fallback for the compiled kernels; same call signatures."""

from __future__ import annotations

import numpy as np

COMPILED = False


def forward_single(weights, biases, x):
    """Forward pass for one input vector: rectifier hidden layers, linear output."""
    h = x
    last = len(weights) - 1
    for layer, (W, b) in enumerate(zip(weights, biases)):
        h = W @ h + b
        if layer != last:
            np.maximum(h, 0.0, out=h)
    return h


def adam_step(param, grad, m, v, step, lr, beta1, beta2, eps):
    """One fused adaptive-moment update, in place on param/m/v (flat views)."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1 ** step)
    vhat = v / (1.0 - beta2 ** step)
    param -= lr * mhat / (np.sqrt(vhat) + eps)

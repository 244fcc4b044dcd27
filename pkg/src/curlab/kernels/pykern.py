"""NumPy reference implementation of the hot kernels.

Semantics contract shared with the compiled backend:
  * hidden activations are rectified linear, the last layer is linear
  * probabilities are max-subtracted softmax rows
  * loss is mean cross entropy over the batch with log clamped at
    probabilities >= LOG_CLAMP
  * gradients are the exact analytic gradients of the (unclamped) mean
    cross entropy with respect to every weight and bias
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

LOG_CLAMP = 1e-12


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(weights: list[np.ndarray], biases: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Class probabilities for a batch, shape (n, K)."""
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = np.maximum(z, 0.0) if i < last else z
    return _softmax(h)


def backward(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    x: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean cross-entropy loss and its gradients for a batch of soft targets."""
    last = len(weights) - 1
    acts = [x]
    pre = []
    h = x
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0) if i < last else z
        acts.append(h)

    probs = _softmax(pre[-1])
    n = x.shape[0]
    loss = float(-(targets * np.log(np.maximum(probs, LOG_CLAMP))).sum() / n)

    delta = (probs - targets) / n
    grad_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    for i in range(last, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (pre[i - 1] > 0.0)
    return loss, grad_w, grad_b

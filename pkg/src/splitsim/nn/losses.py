"""Loss functions returning (scalar loss, gradient w.r.t. first argument).

Discriminator-style losses work on pre-sigmoid logits; probabilities are
clamped to [1e-7, 1 - 1e-7] before any log, so gradients stay finite even
when the sigmoid saturates.
"""

import numpy as np

from .activations import sigmoid

F32 = np.float32
P_EPS = 1e-7


def mse(a, b):
    """Mean over every element of (a - b)^2."""
    d = a - b
    loss = float(np.mean(d.astype(np.float64) ** 2))
    grad = (F32(2.0 / d.size) * d).astype(F32)
    return loss, grad


def bce_from_logits(logits, targets):
    """Binary cross-entropy, mean over the batch; grad w.r.t. logits."""
    p = sigmoid(logits)
    pc = np.clip(p, P_EPS, 1.0 - P_EPS)
    t = targets.astype(F32).reshape(p.shape)
    loss = float(np.mean(-(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc))))
    dpc = (-t / pc + (1.0 - t) / (1.0 - pc)) / p.size
    grad = (dpc * p * (1.0 - p)).astype(F32)
    return loss, grad


def softmax_cross_entropy(logits, labels):
    """Multi-class cross-entropy from logits; labels are integer classes."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    idx = (np.arange(n), labels.astype(np.intp))
    loss = float(np.mean(-np.log(np.maximum(p[idx], P_EPS))))
    grad = p.astype(F32)
    grad[idx] -= 1.0
    grad *= F32(1.0 / n)
    return loss, grad


def accuracy_from_logits(logits, labels):
    return float(np.mean(logits.argmax(axis=1) == labels))

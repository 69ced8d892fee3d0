"""Elementwise activations with first and second derivatives.

Second derivatives feed the double-backward pass used by the discriminator's
gradient penalty. Derivatives are expressed in terms of the pre-activation
``pre`` and the already-computed output ``out`` so callers never recompute the
forward value.
"""

import numpy as np

F32 = np.float32


def sigmoid(x):
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(F32, copy=False)


def _relu(x):
    return np.maximum(x, F32(0.0))


def _swish(x):
    return x * sigmoid(x)


def _d_linear(pre, out):
    return None  # identity jacobian, callers skip the multiply


def _d2_zero(pre, out):
    return None  # identically zero second derivative


def _d_relu(pre, out):
    return (pre > 0).astype(F32)


def _d_sigmoid(pre, out):
    return out * (1.0 - out)


def _d2_sigmoid(pre, out):
    return out * (1.0 - out) * (1.0 - 2.0 * out)


def _d_tanh(pre, out):
    return 1.0 - out * out


def _d2_tanh(pre, out):
    return -2.0 * out * (1.0 - out * out)


def _d_swish(pre, out):
    s = sigmoid(pre)
    return s * (1.0 + pre * (1.0 - s))


def _d2_swish(pre, out):
    s = sigmoid(pre)
    return s * (1.0 - s) * (2.0 + pre * (1.0 - 2.0 * s))


# name -> (forward, first derivative, second derivative); None short-circuits
ACTIVATIONS = {
    "linear": (lambda x: x, _d_linear, _d2_zero),
    "relu": (_relu, _d_relu, _d2_zero),
    "sigmoid": (sigmoid, _d_sigmoid, _d2_sigmoid),
    "tanh": (np.tanh, _d_tanh, _d2_tanh),
    "swish": (_swish, _d_swish, _d2_swish),
}

ACT_CODES = {"linear": 0, "relu": 1, "sigmoid": 2, "tanh": 3, "swish": 4}
ACT_NAMES = {v: k for k, v in ACT_CODES.items()}

"""Adam optimizer over lists of parameter arrays."""

import numpy as np

from ..errors import ShapeMismatchError
from ..kernels import adam_update

F32 = np.float32


class Adam:
    """Standard Adam with bias correction; state arrays mirror the params."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads):
        grads = list(grads)
        if len(grads) != len(self.params):
            raise ShapeMismatchError(
                f"expected {len(self.params)} gradients, got {len(grads)}"
            )
        for p, g in zip(self.params, grads):
            if g.shape != p.shape:
                raise ShapeMismatchError(
                    f"gradient shape {g.shape} != parameter shape {p.shape}"
                )
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            adam_update(p, g, m, v, self.lr, self.beta1, self.beta2, self.eps, c1, c2)

"""Pure-numpy implementations of the data-movement kernels.

All tensors are NHWC float32. The accumulation order (kernel taps outermost,
then rows) matches the numba backend element for element, so the two produce
bit-identical results.
"""

import numpy as np


def gather_patch(x, i0, j0, si, sj, oh, ow):
    """Pack x[:, i0::si, j0::sj, :] (oh x ow window) into a (B*oh*ow, C) matrix."""
    b, _, _, c = x.shape
    view = x[:, i0 : i0 + (oh - 1) * si + 1 : si, j0 : j0 + (ow - 1) * sj + 1 : sj, :]
    return np.ascontiguousarray(view).reshape(b * oh * ow, c)


def scatter_patch_add(y, buf, i0, j0, si, sj, oh, ow):
    """Add a (B*oh*ow, C) matrix into y[:, i0::si, j0::sj, :] in place."""
    b = y.shape[0]
    c = y.shape[3]
    view = y[:, i0 : i0 + (oh - 1) * si + 1 : si, j0 : j0 + (ow - 1) * sj + 1 : sj, :]
    view += buf.reshape(b, oh, ow, c)


def maxpool2x2(x):
    """2x2 stride-2 max pool; returns (pooled, argmax) with argmax in {0,1,2,3}.

    Requires even spatial dims. Ties resolve to the lowest index, matching the
    loop order of the numba kernel.
    """
    b, h, w, c = x.shape
    q = x.reshape(b, h // 2, 2, w // 2, 2, c)
    cand = np.stack(
        (q[:, :, 0, :, 0, :], q[:, :, 0, :, 1, :], q[:, :, 1, :, 0, :], q[:, :, 1, :, 1, :]),
        axis=0,
    )
    idx = cand.argmax(axis=0).astype(np.uint8)
    pooled = np.ascontiguousarray(cand.max(axis=0))
    return pooled, idx


def maxpool2x2_backward(gy, idx, h, w):
    """Route pooled gradients back to the argmax positions of the forward pass."""
    b, oh, ow, c = gy.shape
    gx = np.zeros((b, h, w, c), dtype=gy.dtype)
    gq = gx.reshape(b, oh, 2, ow, 2, c)
    zero = np.float32(0.0)
    for k in range(4):
        di, dj = divmod(k, 2)
        gq[:, :, di, :, dj, :] = np.where(idx == k, gy, zero)
    return gx


def adam_update(p, g, m, v, lr, b1, b2, eps, c1, c2):
    """In-place Adam update of one parameter array (c1/c2: bias corrections)."""
    f = np.float32
    m *= f(b1)
    m += f(1.0 - b1) * g
    v *= f(b2)
    v += f(1.0 - b2) * (g * g)
    p -= f(lr) * (m / f(c1)) / (np.sqrt(v / f(c2)) + f(eps))

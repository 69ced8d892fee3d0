"""Numba-jitted implementations of the data-movement kernels.

Every output element is written by exactly one loop iteration, so results are
deterministic and bit-identical to the numpy backend.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _gather_patch(x, out, i0, j0, si, sj, oh, ow):
    b = x.shape[0]
    c = x.shape[3]
    for bi in range(b):
        for a in range(oh):
            ii = i0 + a * si
            for d in range(ow):
                jj = j0 + d * sj
                row = (bi * oh + a) * ow + d
                for ch in range(c):
                    out[row, ch] = x[bi, ii, jj, ch]


def gather_patch(x, i0, j0, si, sj, oh, ow):
    """Pack x[:, i0::si, j0::sj, :] (oh x ow window) into a (B*oh*ow, C) matrix."""
    b, _, _, c = x.shape
    out = np.empty((b * oh * ow, c), dtype=x.dtype)
    _gather_patch(x, out, i0, j0, si, sj, oh, ow)
    return out


@njit(cache=True)
def _scatter_patch_add(y, buf, i0, j0, si, sj, oh, ow):
    b = y.shape[0]
    c = y.shape[3]
    for bi in range(b):
        for a in range(oh):
            ii = i0 + a * si
            for d in range(ow):
                jj = j0 + d * sj
                row = (bi * oh + a) * ow + d
                for ch in range(c):
                    y[bi, ii, jj, ch] += buf[row, ch]


def scatter_patch_add(y, buf, i0, j0, si, sj, oh, ow):
    """Add a (B*oh*ow, C) matrix into y[:, i0::si, j0::sj, :] in place."""
    _scatter_patch_add(y, buf.reshape(-1, y.shape[3]), i0, j0, si, sj, oh, ow)


@njit(cache=True)
def _maxpool2x2(x, pooled, idx):
    b, oh, ow, c = pooled.shape
    for bi in range(b):
        for a in range(oh):
            for d in range(ow):
                for ch in range(c):
                    best = x[bi, 2 * a, 2 * d, ch]
                    k = np.uint8(0)
                    v = x[bi, 2 * a, 2 * d + 1, ch]
                    if v > best:
                        best = v
                        k = np.uint8(1)
                    v = x[bi, 2 * a + 1, 2 * d, ch]
                    if v > best:
                        best = v
                        k = np.uint8(2)
                    v = x[bi, 2 * a + 1, 2 * d + 1, ch]
                    if v > best:
                        best = v
                        k = np.uint8(3)
                    pooled[bi, a, d, ch] = best
                    idx[bi, a, d, ch] = k


def maxpool2x2(x):
    """2x2 stride-2 max pool; returns (pooled, argmax) with argmax in {0,1,2,3}."""
    b, h, w, c = x.shape
    pooled = np.empty((b, h // 2, w // 2, c), dtype=x.dtype)
    idx = np.empty((b, h // 2, w // 2, c), dtype=np.uint8)
    _maxpool2x2(x, pooled, idx)
    return pooled, idx


@njit(cache=True)
def _maxpool2x2_backward(gy, idx, gx):
    b, oh, ow, c = gy.shape
    for bi in range(b):
        for a in range(oh):
            for d in range(ow):
                for ch in range(c):
                    k = idx[bi, a, d, ch]
                    gx[bi, 2 * a + k // 2, 2 * d + k % 2, ch] = gy[bi, a, d, ch]


def maxpool2x2_backward(gy, idx, h, w):
    """Route pooled gradients back to the argmax positions of the forward pass."""
    b, _, _, c = gy.shape
    gx = np.zeros((b, h, w, c), dtype=gy.dtype)
    _maxpool2x2_backward(gy, idx, gx)
    return gx


@njit(cache=True)
def _adam_update(p, g, m, v, lr, b1, b2, eps, c1, c2):
    one_m_b1 = np.float32(1.0) - b1
    one_m_b2 = np.float32(1.0) - b2
    for i in range(p.size):
        gi = g[i]
        mi = b1 * m[i] + one_m_b1 * gi
        vi = b2 * v[i] + one_m_b2 * gi * gi
        m[i] = mi
        v[i] = vi
        p[i] -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)


def adam_update(p, g, m, v, lr, b1, b2, eps, c1, c2):
    """In-place Adam update of one parameter array (c1/c2: bias corrections)."""
    f = np.float32
    _adam_update(p.reshape(-1), np.ascontiguousarray(g).reshape(-1),
                 m.reshape(-1), v.reshape(-1),
                 f(lr), f(b1), f(b2), f(eps), f(c1), f(c2))

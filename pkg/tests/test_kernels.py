"""Kernel backends agree with each other and with straightforward indexing."""

import numpy as np
import pytest

from splitsim.kernels import numpy_ops

try:
    from splitsim.kernels import numba_ops
    BACKENDS = [numpy_ops, numba_ops]
except ImportError:
    BACKENDS = [numpy_ops]

F32 = np.float32


@pytest.mark.parametrize("ops", BACKENDS)
def test_gather_matches_indexing(ops):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 9, 11, 5)).astype(F32)
    out = ops.gather_patch(x, 1, 2, 2, 3, 4, 3)
    ref = x[:, 1:8:2, 2:9:3, :].reshape(-1, 5)
    np.testing.assert_array_equal(out, ref)


@pytest.mark.parametrize("ops", BACKENDS)
def test_scatter_is_adjoint_of_gather(ops):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 8, 8, 3)).astype(F32)
    buf = rng.normal(size=(2 * 3 * 3, 3)).astype(F32)
    y = np.zeros_like(x)
    ops.scatter_patch_add(y, buf, 1, 1, 2, 2, 3, 3)
    gathered = ops.gather_patch(x, 1, 1, 2, 2, 3, 3)
    lhs = float(np.sum(x * y))
    rhs = float(np.sum(gathered * buf))
    assert abs(lhs - rhs) < 1e-3


@pytest.mark.parametrize("ops", BACKENDS)
def test_maxpool_matches_reshape_max(ops):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2, 6, 4, 3)).astype(F32)
    pooled, idx = ops.maxpool2x2(x)
    ref = x.reshape(2, 3, 2, 2, 2, 3).max(axis=(2, 4))
    np.testing.assert_array_equal(pooled, ref)
    gy = rng.normal(size=pooled.shape).astype(F32)
    gx = ops.maxpool2x2_backward(gy, idx, 6, 4)
    # each window routes its gradient to exactly one position
    assert np.count_nonzero(gx) <= gy.size
    np.testing.assert_allclose(gx.sum(), gy.sum(), rtol=1e-5)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="numba unavailable")
def test_backends_bitwise_identical():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 10, 10, 4)).astype(F32)
    a = numpy_ops.gather_patch(x, 0, 1, 2, 2, 5, 4)
    b = numba_ops.gather_patch(x, 0, 1, 2, 2, 5, 4)
    np.testing.assert_array_equal(a, b)
    pa, ia = numpy_ops.maxpool2x2(x)
    pb, ib = numba_ops.maxpool2x2(x)
    np.testing.assert_array_equal(pa, pb)
    np.testing.assert_array_equal(ia, ib)
    gy = rng.normal(size=pa.shape).astype(F32)
    np.testing.assert_array_equal(
        numpy_ops.maxpool2x2_backward(gy, ia, 10, 10),
        numba_ops.maxpool2x2_backward(gy, ib, 10, 10),
    )
    y1 = np.zeros_like(x)
    y2 = np.zeros_like(x)
    buf = rng.normal(size=(2 * 4 * 4, 4)).astype(F32)
    numpy_ops.scatter_patch_add(y1, buf, 1, 1, 2, 2, 4, 4)
    numba_ops.scatter_patch_add(y2, buf, 1, 1, 2, 2, 4, 4)
    np.testing.assert_array_equal(y1, y2)

"""Layer implementations: forward, reverse-mode backward, and the tangent
(forward-over-reverse) passes needed for double backward.

Convolutions use per-tap GEMMs: for each kernel offset the overlapping input
region is packed to a contiguous matrix, multiplied with one (C_in, C_out)
weight slice via BLAS, and accumulated into the output. On the small feature
maps this package runs on, that skips the padded-zero work an im2col layout
would do. 'same' padding follows the ceil(n/s) output-size convention with the
extra pad row/column placed bottom-right.

Double backward contract: ``tangent`` propagates a directional derivative t
alongside a recorded forward; ``pair_backward`` then pulls adjoints of both the
tangent output (u_t) and the primal output (u_a) back through the layer,
accumulating parameter gradients. For piecewise-linear layers the primal
adjoint picks up no new terms; smooth activations contribute through their
second derivative.
"""

import numpy as np

from ..errors import ShapeMismatchError
from ..kernels import gather_patch, maxpool2x2, maxpool2x2_backward, scatter_patch_add
from .activations import ACTIVATIONS

F32 = np.float32


def same_geometry(in_size, k, s):
    """Output size and pad-before for 'same' padding at stride s."""
    out = -(-in_size // s)
    total = max((out - 1) * s + k - in_size, 0)
    return out, total // 2


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(F32)


def _tap_ranges(h, w, oh, ow, kh, kw, s, pt, pl):
    """Valid output ranges per kernel tap: (di, dj, o0, o1, q0, q1)."""
    taps = []
    for di in range(kh):
        o0 = max(0, -(-(pt - di) // s))
        o1 = min(oh, (h - 1 + pt - di) // s + 1)
        if o1 <= o0:
            continue
        for dj in range(kw):
            q0 = max(0, -(-(pl - dj) // s))
            q1 = min(ow, (w - 1 + pl - dj) // s + 1)
            if q1 <= q0:
                continue
            taps.append((di, dj, o0, o1, q0, q1))
    return taps


def _conv_forward_offset(x, w, s, geom):
    """y[b,oi,oj,n] = sum_taps x[b, oi*s+di-pt, oj*s+dj-pl, c] * w[di,dj,c,n]."""
    oh, ow, pt, pl, taps = geom
    b = x.shape[0]
    n = w.shape[3]
    y = np.zeros((b, oh, ow, n), dtype=F32)
    for di, dj, o0, o1, q0, q1 in taps:
        p = gather_patch(x, o0 * s + di - pt, q0 * s + dj - pl, s, s, o1 - o0, q1 - q0)
        scatter_patch_add(y, p @ w[di, dj], o0, q0, 1, 1, o1 - o0, q1 - q0)
    return y


def _conv_input_grad_offset(gy, w, s, geom, h, wd):
    oh, ow, pt, pl, taps = geom
    b = gy.shape[0]
    c = w.shape[2]
    gx = np.zeros((b, h, wd, c), dtype=F32)
    for di, dj, o0, o1, q0, q1 in taps:
        g = gather_patch(gy, o0, q0, 1, 1, o1 - o0, q1 - q0)
        scatter_patch_add(gx, g @ w[di, dj].T, o0 * s + di - pt, q0 * s + dj - pl, s, s, o1 - o0, q1 - q0)
    return gx


def _conv_weight_grad_offset(x, gy, s, geom, gw):
    oh, ow, pt, pl, taps = geom
    for di, dj, o0, o1, q0, q1 in taps:
        p = gather_patch(x, o0 * s + di - pt, q0 * s + dj - pl, s, s, o1 - o0, q1 - q0)
        g = gather_patch(gy, o0, q0, 1, 1, o1 - o0, q1 - q0)
        gw[di, dj] += p.T @ g


def _im2col(x, s, geom, k):
    """(B*OH*OW, k*k*C) patch matrix; padded taps stay zero."""
    oh, ow, pt, pl, taps = geom
    b, h, wd, c = x.shape
    col = np.zeros((b, oh, ow, k * k, c), dtype=F32)
    for di, dj, o0, o1, q0, q1 in taps:
        i0, j0 = o0 * s + di - pt, q0 * s + dj - pl
        col[:, o0:o1, q0:q1, di * k + dj, :] = x[
            :, i0 : i0 + (o1 - o0 - 1) * s + 1 : s, j0 : j0 + (q1 - q0 - 1) * s + 1 : s, :]
    return col.reshape(b * oh * ow, k * k * c)


def _col2im_add(gcol, s, geom, k, gx):
    oh, ow, pt, pl, taps = geom
    b, h, wd, c = gx.shape
    g5 = gcol.reshape(b, oh, ow, k * k, c)
    for di, dj, o0, o1, q0, q1 in taps:
        i0, j0 = o0 * s + di - pt, q0 * s + dj - pl
        gx[:, i0 : i0 + (o1 - o0 - 1) * s + 1 : s, j0 : j0 + (q1 - q0 - 1) * s + 1 : s, :] += \
            g5[:, o0:o1, q0:q1, di * k + dj, :]
    return gx


# below this input-channel count the single-GEMM im2col path beats the
# per-tap GEMMs (whose K dimension is then too small for BLAS to stretch)
IM2COL_MAX_CHANNELS = 32


class _ConvCore:
    """Strategy holder shared by Conv2D and ConvTranspose2D."""

    def __init__(self, k, s, c_in):
        self.k, self.s = k, s
        self.im2col = c_in <= IM2COL_MAX_CHANNELS

    def forward(self, x, w, geom, ctx=None):
        if self.im2col:
            col = _im2col(x, self.s, geom, self.k)
            if ctx is not None:
                ctx["col"] = col
            oh, ow = geom[0], geom[1]
            n = w.shape[3]
            return (col @ w.reshape(-1, n)).reshape(x.shape[0], oh, ow, n)
        return _conv_forward_offset(x, w, self.s, geom)

    def input_grad(self, gy, w, geom, h, wd):
        if self.im2col:
            b = gy.shape[0]
            n = w.shape[3]
            gcol = gy.reshape(-1, n) @ w.reshape(-1, n).T
            gx = np.zeros((b, h, wd, w.shape[2]), dtype=F32)
            return _col2im_add(gcol, self.s, geom, self.k, gx)
        return _conv_input_grad_offset(gy, w, self.s, geom, h, wd)

    def weight_grad(self, x, gy, geom, gw, ctx=None):
        if self.im2col:
            col = ctx.get("col") if ctx is not None else None
            if col is None:
                col = _im2col(x, self.s, geom, self.k)
            n = gw.shape[3]
            gw += (col.T @ gy.reshape(-1, n)).reshape(gw.shape)
            return
        _conv_weight_grad_offset(x, gy, self.s, geom, gw)


class Layer:
    """Base layer. Parameter gradients accumulate into .grads() buffers."""

    def build(self, in_shape, rng):
        raise NotImplementedError

    def params(self):
        return []

    def grads(self):
        return []

    def zero_grads(self):
        for g in self.grads():
            g[...] = 0.0

    def forward(self, x, ctx=None):
        raise NotImplementedError

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        raise NotImplementedError

    def tangent(self, ctx, t):
        """Propagate a directional derivative through the recorded forward."""
        raise NotImplementedError

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        """Reverse both tangent and primal adjoints; returns (u_t_in, u_a_in)."""
        raise NotImplementedError


class Conv2D(Layer):
    """2D convolution, 'same' padding, fused elementwise activation."""

    kind = "conv"

    def __init__(self, filters, ksize, stride=1, activation="linear", use_bias=True):
        self.filters = filters
        self.ksize = ksize
        self.stride = stride
        self.activation = activation
        self.use_bias = use_bias
        self.act, self.dact, self.d2act = ACTIVATIONS[activation]

    def build(self, in_shape, rng):
        h, w, c = in_shape
        k, s = self.ksize, self.stride
        oh, pt = same_geometry(h, k, s)
        ow, pl = same_geometry(w, k, s)
        self.in_shape = in_shape
        self.out_shape = (oh, ow, self.filters)
        self.geom = (oh, ow, pt, pl, _tap_ranges(h, w, oh, ow, k, k, s, pt, pl))
        self.core = _ConvCore(k, s, c)
        fan = k * k
        self.w = glorot_uniform(rng, (k, k, c, self.filters), fan * c, fan * self.filters)
        self.gw = np.zeros_like(self.w)
        if self.use_bias:
            self.b = np.zeros(self.filters, dtype=F32)
            self.gb = np.zeros_like(self.b)
        return self.out_shape

    def params(self):
        return [self.w, self.b] if self.use_bias else [self.w]

    def grads(self):
        return [self.gw, self.gb] if self.use_bias else [self.gw]

    def forward(self, x, ctx=None, skip_act=False):
        pre = self.core.forward(x, self.w, self.geom, ctx)
        if self.use_bias:
            pre += self.b
        out = pre if skip_act else self.act(pre)
        if ctx is not None:
            ctx["x"] = x
            ctx["pre"] = pre
            ctx["out"] = out
            ctx["skip_act"] = skip_act
        return out

    def _dact_cached(self, ctx):
        if "dact" not in ctx:
            ctx["dact"] = None if ctx["skip_act"] else self.dact(ctx["pre"], ctx["out"])
        return ctx["dact"]

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        d = self._dact_cached(ctx)
        gpre = gy if d is None else gy * d
        if need_param_grads:
            self.core.weight_grad(ctx["x"], gpre, self.geom, self.gw, ctx)
            if self.use_bias:
                self.gb += gpre.sum(axis=(0, 1, 2))
        if not need_input_grad:
            return None
        h, w, _ = self.in_shape
        return self.core.input_grad(gpre, self.w, self.geom, h, w)

    def tangent(self, ctx, t):
        tpre = self.core.forward(t, self.w, self.geom)
        d = self._dact_cached(ctx)
        ctx["tpre"] = tpre
        return tpre if d is None else tpre * d

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        d = self._dact_cached(ctx)
        u_tpre = u_t if d is None else u_t * d
        # primal adjoint: chain through the activation plus the curvature term
        # u_t * t_pre * act''(pre) arising from d(act'(pre))/dpre
        u_pre = None
        if u_a is not None:
            u_pre = u_a if d is None else u_a * d
        d2 = None if ctx["skip_act"] else self.d2act(ctx["pre"], ctx["out"])
        if d2 is not None:
            curv = u_t * ctx["tpre"] * d2
            u_pre = curv if u_pre is None else u_pre + curv
        self.core.weight_grad(ctx["t_in"], u_tpre, self.geom, self.gw)
        if u_pre is not None:
            self.core.weight_grad(ctx["x"], u_pre, self.geom, self.gw, ctx)
            if self.use_bias:
                self.gb += u_pre.sum(axis=(0, 1, 2))
        if not need_input_grad:
            return None, None
        h, w, _ = self.in_shape
        u_t_in = self.core.input_grad(u_tpre, self.w, self.geom, h, w)
        u_a_in = None
        if u_pre is not None:
            u_a_in = self.core.input_grad(u_pre, self.w, self.geom, h, w)
        return u_t_in, u_a_in


class ConvTranspose2D(Layer):
    """Transposed convolution: exact adjoint of a stride-s 'same' convolution
    mapping the (s*H, s*W) output grid back to (H, W)."""

    kind = "convt"

    def __init__(self, filters, ksize, stride=2, activation="linear", use_bias=True):
        self.filters = filters
        self.ksize = ksize
        self.stride = stride
        self.activation = activation
        self.use_bias = use_bias
        self.act, self.dact, self.d2act = ACTIVATIONS[activation]

    def build(self, in_shape, rng):
        h, w, c = in_shape
        k, s = self.ksize, self.stride
        oh, ow = h * s, w * s
        # geometry of the virtual forward conv (oh, ow) -> (h, w)
        hh, pt = same_geometry(oh, k, s)
        ww, pl = same_geometry(ow, k, s)
        assert (hh, ww) == (h, w)
        self.in_shape = in_shape
        self.out_shape = (oh, ow, self.filters)
        self.geom = (h, w, pt, pl, _tap_ranges(oh, ow, h, w, k, k, s, pt, pl))
        # the virtual conv reads self.filters channels, so that count decides
        # the im2col-vs-offset strategy
        self.core = _ConvCore(k, s, self.filters)
        fan = k * k
        # stored as the virtual conv's kernel: (k, k, C_out, C_in)
        self.w = glorot_uniform(rng, (k, k, self.filters, c), fan * c, fan * self.filters)
        self.gw = np.zeros_like(self.w)
        if self.use_bias:
            self.b = np.zeros(self.filters, dtype=F32)
            self.gb = np.zeros_like(self.b)
        return self.out_shape

    def params(self):
        return [self.w, self.b] if self.use_bias else [self.w]

    def grads(self):
        return [self.gw, self.gb] if self.use_bias else [self.gw]

    def _up(self, x):
        oh, ow, _ = self.out_shape
        return self.core.input_grad(x, self.w, self.geom, oh, ow)

    def _down(self, y):
        return self.core.forward(y, self.w, self.geom)

    def forward(self, x, ctx=None, skip_act=False):
        pre = self._up(x)
        if self.use_bias:
            pre += self.b
        out = pre if skip_act else self.act(pre)
        if ctx is not None:
            ctx["x"] = x
            ctx["pre"] = pre
            ctx["out"] = out
            ctx["skip_act"] = skip_act
        return out

    def _dact_cached(self, ctx):
        if "dact" not in ctx:
            ctx["dact"] = None if ctx["skip_act"] else self.dact(ctx["pre"], ctx["out"])
        return ctx["dact"]

    def _weight_grad(self, x, gpre):
        # adjoint roles: the out-space tensor takes the strided gather
        self.core.weight_grad(gpre, x, self.geom, self.gw)

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        d = self._dact_cached(ctx)
        gpre = gy if d is None else gy * d
        if need_param_grads:
            self._weight_grad(ctx["x"], gpre)
            if self.use_bias:
                self.gb += gpre.sum(axis=(0, 1, 2))
        if not need_input_grad:
            return None
        return self._down(gpre)

    def tangent(self, ctx, t):
        tpre = self._up(t)
        d = self._dact_cached(ctx)
        ctx["tpre"] = tpre
        return tpre if d is None else tpre * d

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        d = self._dact_cached(ctx)
        u_tpre = u_t if d is None else u_t * d
        u_pre = None
        if u_a is not None:
            u_pre = u_a if d is None else u_a * d
        d2 = None if ctx["skip_act"] else self.d2act(ctx["pre"], ctx["out"])
        if d2 is not None:
            curv = u_t * ctx["tpre"] * d2
            u_pre = curv if u_pre is None else u_pre + curv
        self._weight_grad(ctx["t_in"], u_tpre)
        if u_pre is not None:
            self._weight_grad(ctx["x"], u_pre)
            if self.use_bias:
                self.gb += u_pre.sum(axis=(0, 1, 2))
        if not need_input_grad:
            return None, None
        u_t_in = self._down(u_tpre)
        u_a_in = self._down(u_pre) if u_pre is not None else None
        return u_t_in, u_a_in


class MaxPool2x2(Layer):
    """2x2 stride-2 max pooling; spatial dims must be even."""

    kind = "pool"

    def build(self, in_shape, rng):
        h, w, c = in_shape
        if h % 2 or w % 2:
            raise ShapeMismatchError(f"max pool needs even spatial dims, got {in_shape}")
        self.in_shape = in_shape
        self.out_shape = (h // 2, w // 2, c)
        return self.out_shape

    def forward(self, x, ctx=None):
        out, idx = maxpool2x2(x)
        if ctx is not None:
            ctx["x"] = x
            ctx["idx"] = idx
        return out

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        if not need_input_grad:
            return None
        h, w, _ = self.in_shape
        return maxpool2x2_backward(gy, ctx["idx"], h, w)

    def tangent(self, ctx, t):
        b = t.shape[0]
        h, w, _ = self.in_shape
        # route the tangent through the primal argmax
        q = t.reshape(b, h // 2, 2, w // 2, 2, t.shape[3])
        idx = ctx["idx"]
        out = np.empty((b, h // 2, w // 2, t.shape[3]), dtype=F32)
        for k in range(4):
            di, dj = divmod(k, 2)
            np.copyto(out, q[:, :, di, :, dj, :], where=idx == k)
        return out

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        if not need_input_grad:
            return None, None
        h, w, _ = self.in_shape
        u_t_in = maxpool2x2_backward(u_t, ctx["idx"], h, w)
        u_a_in = maxpool2x2_backward(u_a, ctx["idx"], h, w) if u_a is not None else None
        return u_t_in, u_a_in


class Dense(Layer):
    """Fully connected layer on (B, features) inputs."""

    kind = "dense"

    def __init__(self, units, activation="linear", use_bias=True):
        self.units = units
        self.activation = activation
        self.use_bias = use_bias
        self.act, self.dact, self.d2act = ACTIVATIONS[activation]

    def build(self, in_shape, rng):
        if len(in_shape) != 1:
            raise ShapeMismatchError(f"dense expects flat input, got {in_shape}")
        (c,) = in_shape
        self.in_shape = in_shape
        self.out_shape = (self.units,)
        self.w = glorot_uniform(rng, (c, self.units), c, self.units)
        self.gw = np.zeros_like(self.w)
        if self.use_bias:
            self.b = np.zeros(self.units, dtype=F32)
            self.gb = np.zeros_like(self.b)
        return self.out_shape

    def params(self):
        return [self.w, self.b] if self.use_bias else [self.w]

    def grads(self):
        return [self.gw, self.gb] if self.use_bias else [self.gw]

    def forward(self, x, ctx=None, skip_act=False):
        pre = x @ self.w
        if self.use_bias:
            pre += self.b
        out = pre if skip_act else self.act(pre)
        if ctx is not None:
            ctx["x"] = x
            ctx["pre"] = pre
            ctx["out"] = out
            ctx["skip_act"] = skip_act
        return out

    def _dact_cached(self, ctx):
        if "dact" not in ctx:
            ctx["dact"] = None if ctx["skip_act"] else self.dact(ctx["pre"], ctx["out"])
        return ctx["dact"]

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        d = self._dact_cached(ctx)
        gpre = gy if d is None else gy * d
        if need_param_grads:
            self.gw += ctx["x"].T @ gpre
            if self.use_bias:
                self.gb += gpre.sum(axis=0)
        if not need_input_grad:
            return None
        return gpre @ self.w.T

    def tangent(self, ctx, t):
        tpre = t @ self.w
        d = self._dact_cached(ctx)
        ctx["tpre"] = tpre
        return tpre if d is None else tpre * d

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        d = self._dact_cached(ctx)
        u_tpre = u_t if d is None else u_t * d
        u_pre = None
        if u_a is not None:
            u_pre = u_a if d is None else u_a * d
        d2 = None if ctx["skip_act"] else self.d2act(ctx["pre"], ctx["out"])
        if d2 is not None:
            curv = u_t * ctx["tpre"] * d2
            u_pre = curv if u_pre is None else u_pre + curv
        self.gw += ctx["t_in"].T @ u_tpre
        if u_pre is not None:
            self.gw += ctx["x"].T @ u_pre
            if self.use_bias:
                self.gb += u_pre.sum(axis=0)
        if not need_input_grad:
            return None, None
        u_t_in = u_tpre @ self.w.T
        u_a_in = u_pre @ self.w.T if u_pre is not None else None
        return u_t_in, u_a_in


class Flatten(Layer):
    kind = "flatten"

    def build(self, in_shape, rng):
        self.in_shape = in_shape
        self.out_shape = (int(np.prod(in_shape)),)
        return self.out_shape

    def forward(self, x, ctx=None):
        return x.reshape(x.shape[0], -1)

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        if not need_input_grad:
            return None
        return gy.reshape(gy.shape[0], *self.in_shape)

    def tangent(self, ctx, t):
        return t.reshape(t.shape[0], -1)

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        if not need_input_grad:
            return None, None
        shape = (-1, *self.in_shape)
        u_a_in = u_a.reshape(shape) if u_a is not None else None
        return u_t.reshape(shape), u_a_in


class Reshape(Layer):
    kind = "reshape"

    def __init__(self, target_shape):
        self.target_shape = tuple(int(d) for d in target_shape)

    def build(self, in_shape, rng):
        if int(np.prod(in_shape)) != int(np.prod(self.target_shape)):
            raise ShapeMismatchError(f"cannot reshape {in_shape} to {self.target_shape}")
        self.in_shape = in_shape
        self.out_shape = self.target_shape
        return self.out_shape

    def forward(self, x, ctx=None):
        return x.reshape(x.shape[0], *self.target_shape)

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        if not need_input_grad:
            return None
        return gy.reshape(gy.shape[0], *self.in_shape)

    def tangent(self, ctx, t):
        return t.reshape(t.shape[0], *self.target_shape)

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        if not need_input_grad:
            return None, None
        shape = (-1, *self.in_shape)
        u_a_in = u_a.reshape(shape) if u_a is not None else None
        return u_t.reshape(shape), u_a_in


class ResidualBlock(Layer):
    """Pre-activation residual block: x + 0.3 * conv(relu(conv(relu(x))))."""

    kind = "residual"
    SCALE = F32(0.3)

    def __init__(self, filters):
        self.filters = filters
        self.conv1 = Conv2D(filters, 3, 1, "linear")
        self.conv2 = Conv2D(filters, 3, 1, "linear")

    def build(self, in_shape, rng):
        if in_shape[-1] != self.filters:
            raise ShapeMismatchError(
                f"residual block expects {self.filters} channels, got {in_shape[-1]}"
            )
        self.in_shape = in_shape
        self.conv1.build(in_shape, rng)
        self.conv2.build(in_shape, rng)
        self.out_shape = in_shape
        return self.out_shape

    def params(self):
        return self.conv1.params() + self.conv2.params()

    def grads(self):
        return self.conv1.grads() + self.conv2.grads()

    def forward(self, x, ctx=None):
        c1, c2 = ({}, {}) if ctx is not None else (None, None)
        r1 = np.maximum(x, F32(0.0))
        h1 = self.conv1.forward(r1, c1)
        r2 = np.maximum(h1, F32(0.0))
        h2 = self.conv2.forward(r2, c2)
        out = x + self.SCALE * h2
        if ctx is not None:
            ctx["x"] = x
            ctx["m1"] = x > 0
            ctx["m2"] = h1 > 0
            ctx["c1"] = c1
            ctx["c2"] = c2
        return out

    def backward(self, ctx, gy, need_input_grad=True, need_param_grads=True):
        g2 = self.SCALE * gy
        gr2 = self.conv2.backward(ctx["c2"], g2, True, need_param_grads)
        gh1 = gr2 * ctx["m2"]
        gr1 = self.conv1.backward(ctx["c1"], gh1, need_input_grad, need_param_grads)
        if not need_input_grad:
            return None
        return gy + gr1 * ctx["m1"]

    def tangent(self, ctx, t):
        t1 = t * ctx["m1"]
        th1 = self.conv1.tangent(ctx["c1"], t1)
        ctx["c1"]["t_in"] = t1
        t2 = th1 * ctx["m2"]
        th2 = self.conv2.tangent(ctx["c2"], t2)
        ctx["c2"]["t_in"] = t2
        return t + self.SCALE * th2

    def pair_backward(self, ctx, u_t, u_a, need_input_grad=True):
        ut2 = self.SCALE * u_t
        ua2 = self.SCALE * u_a if u_a is not None else None
        ut_r2, ua_r2 = self.conv2.pair_backward(ctx["c2"], ut2, ua2, True)
        m2 = ctx["m2"]
        ut_h1 = ut_r2 * m2
        ua_h1 = ua_r2 * m2 if ua_r2 is not None else None
        ut_r1, ua_r1 = self.conv1.pair_backward(ctx["c1"], ut_h1, ua_h1, need_input_grad)
        if not need_input_grad:
            return None, None
        m1 = ctx["m1"]
        u_t_in = u_t + ut_r1 * m1
        if u_a is not None or ua_r1 is not None:
            u_a_in = (u_a if u_a is not None else 0) + (ua_r1 * m1 if ua_r1 is not None else 0)
        else:
            u_a_in = None
        return u_t_in, u_a_in

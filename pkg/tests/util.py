"""Shared test helpers.

``ref_forward`` is an independent float64 re-implementation of every layer
(sliding windows + einsum, explicit scatter loops) used as the oracle for
finite-difference gradient checks; float32 forward noise would otherwise
swamp central differences at h=1e-3.
"""

import numpy as np

F32 = np.float32


def _same_pad(n, k, s):
    out = -(-n // s)
    total = max((out - 1) * s + k - n, 0)
    return out, total // 2, total - total // 2


def _act64(name, x):
    if name == "linear":
        return x
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x))
    if name == "tanh":
        return np.tanh(x)
    if name == "swish":
        return x / (1.0 + np.exp(-x))
    raise ValueError(name)


def _ref_conv(x, w, b, s):
    kh, kw = w.shape[0], w.shape[1]
    _, h, wd, _ = x.shape
    oh, pt, pb = _same_pad(h, kh, s)
    ow, pl, pr = _same_pad(wd, kw, s)
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, ::s, ::s]  # (b, oh, ow, c, kh, kw)
    y = np.einsum("bijckl,klcn->bijn", win, w)
    return y + (b if b is not None else 0.0)


def _ref_convt(x, w, b, s):
    # exact adjoint of the stride-s 'same' conv from (h*s, w*s) back to (h, w)
    kh, kw = w.shape[0], w.shape[1]
    n_b, h, wd, cin = x.shape
    oh, ow = h * s, wd * s
    cout = w.shape[2]
    _, pt, _ = _same_pad(oh, kh, s)
    _, pl, _ = _same_pad(ow, kw, s)
    y = np.zeros((n_b, oh, ow, cout))
    for bi in range(n_b):
        for oi in range(h):
            for oj in range(wd):
                for di in range(kh):
                    ii = oi * s + di - pt
                    if not 0 <= ii < oh:
                        continue
                    for dj in range(kw):
                        jj = oj * s + dj - pl
                        if 0 <= jj < ow:
                            y[bi, ii, jj] += w[di, dj] @ x[bi, oi, oj]
    return y + (b if b is not None else 0.0)


def _ref_pool(x):
    b, h, w, c = x.shape
    q = x.reshape(b, h // 2, 2, w // 2, 2, c)
    return q.max(axis=(2, 4))


def ref_apply(layer, x):
    kind = layer.kind
    if kind == "conv":
        b = layer.b.astype(np.float64) if layer.use_bias else None
        return _act64(layer.activation, _ref_conv(x, layer.w.astype(np.float64), b, layer.stride))
    if kind == "convt":
        b = layer.b.astype(np.float64) if layer.use_bias else None
        return _act64(layer.activation, _ref_convt(x, layer.w.astype(np.float64), b, layer.stride))
    if kind == "pool":
        return _ref_pool(x)
    if kind == "dense":
        pre = x @ layer.w.astype(np.float64)
        if layer.use_bias:
            pre = pre + layer.b.astype(np.float64)
        return _act64(layer.activation, pre)
    if kind == "flatten":
        return x.reshape(x.shape[0], -1)
    if kind == "reshape":
        return x.reshape(x.shape[0], *layer.target_shape)
    if kind == "residual":
        r1 = np.maximum(x, 0.0)
        h1 = ref_apply(layer.conv1, r1)
        r2 = np.maximum(h1, 0.0)
        h2 = ref_apply(layer.conv2, r2)
        return x + 0.3 * h2
    raise ValueError(kind)


def ref_forward(graph, x):
    h = np.asarray(x, dtype=np.float64)
    for layer in graph.layers:
        h = ref_apply(layer, h)
    return h


def numeric_grad(f, x, h=1e-3):
    """Central finite differences of scalar f at array x (float64 throughout)."""
    x = x.astype(np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        orig = x[i]
        x[i] = orig + h
        fp = f(x)
        x[i] = orig - h
        fm = f(x)
        x[i] = orig
        g[i] = (fp - fm) / (2 * h)
        it.iternext()
    return g


def rel_err(a, b, floor=1e-4):
    """Max relative error with a floor tied to the tensor's own scale.

    float32 backward accumulation carries absolute noise proportional to the
    largest gradient entries, so near-zero entries are compared against
    1e-3 * max|b| rather than themselves.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lo = max(floor, 1e-3 * float(np.max(np.abs(b))) if b.size else floor)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), lo)
    return float(np.max(np.abs(a - b) / denom))


def kink_margin(graph):
    """Distance of the recorded forward pass from ReLU kinks and pool ties.

    Finite differences are only trustworthy when no activation sits near its
    nondifferentiable point; callers resample inputs until this is large.
    """
    margin = np.inf
    for layer, ctx in graph._tape:
        if getattr(layer, "activation", None) == "relu":
            margin = min(margin, float(np.min(np.abs(ctx["pre"]))))
        if layer.kind == "residual":
            margin = min(margin, float(np.min(np.abs(ctx["x"]))))
            margin = min(margin, float(np.min(np.abs(ctx["c1"]["pre"]))))
        if layer.kind == "pool":
            x = ctx["x"]
            b, h, w, c = x.shape
            q = x.reshape(b, h // 2, 2, w // 2, 2, c)
            cand = np.stack(
                (q[:, :, 0, :, 0, :], q[:, :, 0, :, 1, :],
                 q[:, :, 1, :, 0, :], q[:, :, 1, :, 1, :]), axis=0)
            top2 = np.sort(cand, axis=0)[-2:]
            margin = min(margin, float(np.min(top2[1] - top2[0])))
    return margin


def graph_param_fd(graph, x, loss_fn, h=1e-3):
    """Finite-difference parameter gradients of loss_fn(ref_forward(graph, x)).

    Perturbs the live float32 parameters but evaluates through the float64
    reference forward, keeping the oracle independent of the backward path.
    """
    grads = []
    for p in graph.params():
        g = np.zeros(p.shape, dtype=np.float64)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            i = it.multi_index
            orig = p[i]
            p[i] = F32(orig + h)
            fp = loss_fn(ref_forward(graph, x))
            p[i] = F32(orig - h)
            fm = loss_fn(ref_forward(graph, x))
            p[i] = orig
            g[i] = (fp - fm) / (2 * h)
            it.iternext()
        grads.append(g)
    return grads

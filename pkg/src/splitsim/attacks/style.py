"""The "+style" attack extension: a perceptual term over a frozen vision
network added to the forged client objective.

The style loss compares batch-mean Gram matrices of the vision net's first m
tap activations for the two reconstructions (client-side and pilot-side); its
gradient flows only into the forged gradient w.r.t. the smashed data — the
frozen probe and the server networks receive nothing from this term.
"""

import numpy as np

from ..errors import ShapeMismatchError
from ..nn import VISION_TAPS
from .fsha import (
    attacker_setup_step as _plain_step,
    autoencoder_step,
    discriminator_step,
    forge_gradient,
    _check_finite,
)

F32 = np.float32
STYLE_WEIGHT = 1000.0


class VisionProbe:
    """Frozen feature extractor exposing ``taps`` intermediate activations."""

    def __init__(self, graph, taps=VISION_TAPS):
        self.graph = graph
        self.taps = tuple(taps)
        self.checksum = self.param_checksum()

    def param_checksum(self):
        return float(sum(np.abs(p.astype(np.float64)).sum() for p in self.graph.params()))

    def adapt(self, x):
        """Channel-tile / nearest-neighbor resize into the probe's input shape."""
        h, w, c = self.graph.input_shape
        n, xh, xw, xc = x.shape
        reps = 1
        if xc != c:
            if c % xc:
                raise ShapeMismatchError(f"cannot tile {xc} channels to {c}")
            reps = c // xc
            x = np.tile(x, (1, 1, 1, reps))
        if (xh, xw) != (h, w):
            ri = (np.arange(h) * xh // h).astype(np.intp)
            rj = (np.arange(w) * xw // w).astype(np.intp)
            x = x[:, ri][:, :, rj]
        return np.ascontiguousarray(x, dtype=F32), reps

    def unadapt_grad(self, g, reps, out_shape):
        """Adjoint of ``adapt`` for the gradient path."""
        n, h, w, c = out_shape
        if g.shape[1:3] != (h, w):
            up = np.zeros((g.shape[0], h, w, g.shape[3]), dtype=F32)
            ri = (np.arange(g.shape[1]) * h // g.shape[1]).astype(np.intp)
            rj = (np.arange(g.shape[2]) * w // g.shape[2]).astype(np.intp)
            np.add.at(up, (slice(None), ri[:, None], rj[None, :]), g)
            g = up
        if reps > 1:
            g = g.reshape(g.shape[0], h, w, reps, c).sum(axis=3)
        return g


def gram_matrix(features):
    """Per-example Gram matrix G = F^T F / (h*w) of an NHWC activation."""
    if features.ndim != 4:
        raise ShapeMismatchError(f"gram_matrix expects rank-4 input, got rank {features.ndim}")
    b, h, w, c = features.shape
    f = features.reshape(b, h * w, c)
    return np.einsum("bpc,bpd->bcd", f, f) / F32(h * w)


def style_loss(probe, rec_priv, rec_pub):
    """Mean over taps of MSE between batch-mean Gram matrices (equal weights)."""
    loss, _ = style_loss_and_grad(probe, rec_priv, rec_pub, need_grad=False)
    return loss


def style_loss_and_grad(probe, rec_priv, rec_pub, need_grad=True):
    """Style loss plus its gradient w.r.t. ``rec_priv``; the probe is frozen."""
    a, reps = probe.adapt(rec_priv)
    bimg, _ = probe.adapt(rec_pub)
    taps_b = probe.graph.forward_collect(bimg, probe.taps)
    probe.graph.forward(a, record=True)
    taps_a = probe.graph.tape_outputs(probe.taps)
    total = 0.0
    seeds = {}
    m = len(probe.taps)
    n = len(a)
    for tap, fa, fb in zip(probe.taps, taps_a, taps_b):
        ga = gram_matrix(fa).mean(axis=0)
        gb = gram_matrix(fb).mean(axis=0)
        diff = (ga - gb).astype(np.float64)
        total += float(np.mean(diff * diff))
        if need_grad:
            _, h, w, c = fa.shape
            u = (2.0 / (diff.size * m)) * diff  # dL/dGa, symmetric
            # Ga = mean_b F_b^T F_b / (hw): dL/dF_b = 2 F_b u / (n hw)
            g = np.einsum("bpc,cd->bpd", fa.reshape(n, h * w, c).astype(np.float64),
                          u + u.T) / (n * h * w)
            seeds[tap] = g.reshape(fa.shape).astype(F32)
    total /= m
    if not need_grad:
        probe.graph.discard_tape()
        return total, None
    gin = probe.graph.backward_multi(seeds, need_param_grads=False)
    return total, probe.unadapt_grad(gin, reps, rec_priv.shape)


def attacker_setup_step_style(state, probe, smashed, pub_batch,
                              style_weight=STYLE_WEIGHT):
    """FSHA setup step whose forged gradient carries the style term.

    With style_weight == 0 this is bit-for-bit the plain step."""
    if style_weight == 0:
        return _plain_step(state, smashed, pub_batch)
    ae_loss = autoencoder_step(state, pub_batch)
    d_loss, gp = discriminator_step(state, smashed, pub_batch)
    forged, f_loss, mean_d_priv = forge_gradient(state, smashed)
    # style branch: compare the two reconstructions through the frozen probe
    z_pub = state.f_tilde.forward(pub_batch)
    rec_pub = state.f_tilde_inv.forward(z_pub)
    rec_priv = state.f_tilde_inv.forward(smashed, record=True)
    sloss, d_rec = style_loss_and_grad(probe, rec_priv, rec_pub)
    g_style = state.f_tilde_inv.backward(F32(style_weight) * d_rec,
                                         need_param_grads=False)
    forged = forged + g_style
    _check_finite("forged gradient", forged)
    state.iteration += 1
    metrics = {
        "ae_loss": ae_loss,
        "d_loss": d_loss,
        "gp": gp,
        "f_loss": f_loss,
        "mean_D_priv": mean_d_priv,
        "style_loss": sloss,
    }
    return forged, metrics

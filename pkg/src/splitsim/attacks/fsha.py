"""Feature-space hijacking: the malicious server's training step.

Per protocol iteration the server (1) trains the pilot/inverse pair as an
autoencoder on its public batch, (2) trains the discriminator to score the
pilot's feature space above the clients' (with a two-sided unit-norm gradient
penalty on interpolates), and (3) forges the gradient it returns to the
client: the input-gradient of -log D(smashed), which drags f's feature space
onto the pilot's. The printed sign conventions follow the goal statements:
D minimizes -[log D(ft(x_pub)) + log(1 - D(f(x_priv)))], f minimizes
-log D(f(x_priv)).

The attacker only ever sees protocol messages and its own public data; labels
and the client architecture never enter this module.
"""

import logging

import numpy as np

from ..errors import ShapeMismatchError, SplitSimError
from ..nn import Adam, bce_from_logits, build_architecture, mse
from ..nn.activations import sigmoid

log = logging.getLogger("splitsim.fsha")

F32 = np.float32
GP_WEIGHT = 50.0
LR = 1e-4


class AttackState:
    """Server-side bundle: pilot, inverse, discriminator, their optimizers."""

    def __init__(self, image_shape, smashed_shape, rng, gp_weight=GP_WEIGHT,
                 lr=LR, channels_out=None):
        c = image_shape[-1] if channels_out is None else channels_out
        self.f_tilde = build_architecture("f_tilde", image_shape, rng)
        if self.f_tilde.output_shape != tuple(smashed_shape):
            raise ShapeMismatchError(
                f"pilot output {self.f_tilde.output_shape} != smashed {smashed_shape}")
        self.f_tilde_inv = build_architecture("f_tilde_inv", smashed_shape, rng,
                                              channels_out=c)
        self.discriminator = build_architecture("D", smashed_shape, rng)
        self.opt_tilde = Adam(self.f_tilde.params(), lr=lr)
        self.opt_inv = Adam(self.f_tilde_inv.params(), lr=lr)
        self.opt_d = Adam(self.discriminator.params(), lr=lr)
        self.gp_weight = gp_weight
        self.gp_rng = np.random.default_rng(rng.integers(2**63))
        self.iteration = 0


def gradient_penalty(d_graph, real_like, fake_like, rng, weight=0.0):
    """Two-sided gradient penalty on per-example interpolates.

    Returns mean((||dD/dx|| - 1)^2) computed on the discriminator's logit
    head. With ``weight`` > 0 the penalty's parameter gradients (scaled by
    the weight) are accumulated into the discriminator's grad buffers via a
    tangent/pair double-backward pass.
    """
    if real_like.shape != fake_like.shape:
        raise ShapeMismatchError(
            f"interpolation endpoints differ: {real_like.shape} vs {fake_like.shape}")
    b = real_like.shape[0]
    eps = rng.uniform(0.0, 1.0, size=(b,) + (1,) * (real_like.ndim - 1)).astype(F32)
    xhat = eps * real_like + (1.0 - eps) * fake_like
    logit = d_graph.forward(xhat, record=True, logits=True)
    ones = np.ones_like(logit)
    g = d_graph.backward(ones, need_param_grads=False, keep_tape=True)
    flat = g.reshape(b, -1).astype(np.float64)
    norms = np.sqrt((flat * flat).sum(axis=1))
    flagged = not np.all(np.isfinite(norms))
    if flagged:
        log.warning("non-finite gradient norm in penalty; clamping")
        norms = np.nan_to_num(norms, nan=1e6, posinf=1e6)
    penalty = float(np.mean((norms - 1.0) ** 2))
    if weight:
        coef = 2.0 * (norms - 1.0) / (b * np.maximum(norms, 1e-12))
        v = (weight * coef)[:, None] * flat
        d_graph.tangent_forward(v.reshape(g.shape).astype(F32))
        d_graph.pair_backward(ones)
    else:
        d_graph.discard_tape()
    return penalty, flagged


def _check_finite(name, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise SplitSimError(f"non-finite {name}; attack step aborted")


def autoencoder_step(state, pub_batch):
    """Joint pilot/inverse update toward an auto-encoding pair (MSE distance)."""
    z = state.f_tilde.forward(pub_batch, record=True)
    rec = state.f_tilde_inv.forward(z, record=True)
    ae_loss, d_rec = mse(rec, pub_batch)
    _check_finite("autoencoder loss", ae_loss)
    state.f_tilde.zero_grads()
    state.f_tilde_inv.zero_grads()
    gz = state.f_tilde_inv.backward(d_rec)
    state.f_tilde.backward(gz, need_input_grad=False)
    state.opt_inv.step(state.f_tilde_inv.grads())
    state.opt_tilde.step(state.f_tilde.grads())
    return ae_loss


def discriminator_step(state, smashed, pub_batch):
    """Train D: pilot features score high, client features low, plus the
    gradient penalty. Returns (data loss per the printed convention, gp)."""
    z_pub = state.f_tilde.forward(pub_batch)
    both = np.concatenate([z_pub, smashed], axis=0)
    logits = state.discriminator.forward(both, record=True, logits=True)
    b = len(z_pub)
    targets = np.concatenate([np.ones(b, dtype=F32), np.zeros(len(smashed), dtype=F32)])
    bce, dlogits = bce_from_logits(logits, targets)
    # the paper's L_D sums the two log terms per pair; mean-over-2B halves both
    d_loss = 2.0 * bce
    _check_finite("discriminator loss", d_loss)
    state.discriminator.zero_grads()
    state.discriminator.backward(2.0 * dlogits, need_input_grad=False)
    gp, _ = gradient_penalty(state.discriminator, z_pub, smashed, state.gp_rng,
                             weight=state.gp_weight)
    state.opt_d.step(state.discriminator.grads())
    return d_loss, gp


def forge_gradient(state, smashed):
    """Input-gradient of -log D(smashed): the hijacking signal for f.

    Also reports mean D(smashed), the discriminator's view of the client's
    feature space (drifts toward 0.5 as the spaces overlap)."""
    logits = state.discriminator.forward(smashed, record=True, logits=True)
    f_loss, dlogits = bce_from_logits(logits, np.ones(len(smashed), dtype=F32))
    forged = state.discriminator.backward(dlogits, need_param_grads=False)
    mean_d_priv = float(np.mean(sigmoid(logits)))
    return forged, f_loss, mean_d_priv


def attacker_setup_step(state, smashed, pub_batch):
    """One full setup-phase iteration; returns (forged_grad, metrics)."""
    if smashed.shape[1:] != state.f_tilde.output_shape:
        raise ShapeMismatchError(
            f"smashed shape {smashed.shape[1:]} != pilot feature shape "
            f"{state.f_tilde.output_shape}")
    ae_loss = autoencoder_step(state, pub_batch)
    d_loss, gp = discriminator_step(state, smashed, pub_batch)
    forged, f_loss, mean_d_priv = forge_gradient(state, smashed)
    _check_finite("forged gradient", forged)
    state.iteration += 1
    metrics = {
        "ae_loss": ae_loss,
        "d_loss": d_loss,
        "gp": gp,
        "f_loss": f_loss,
        "mean_D_priv": mean_d_priv,
    }
    return forged, metrics


def recover(state, smashed):
    """Inference phase: map smashed data back to image space."""
    if state.iteration < 1:
        raise SplitSimError("recover called before any setup iteration")
    if smashed.shape[1:] != state.f_tilde_inv.input_shape:
        raise ShapeMismatchError(
            f"smashed shape {smashed.shape[1:]} != inverse input "
            f"{state.f_tilde_inv.input_shape}")
    return state.f_tilde_inv.forward(smashed)


def reconstruction_mse(x, x_rec):
    """Mean squared error over batch and pixels, inputs normalized in [-1, 1]."""
    if x.shape != x_rec.shape:
        raise ShapeMismatchError(f"shape mismatch {x.shape} vs {x_rec.shape}")
    d = x.astype(np.float64) - x_rec.astype(np.float64)
    return float(np.mean(d * d))

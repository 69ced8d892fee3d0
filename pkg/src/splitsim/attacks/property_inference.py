"""Attribute-inference variant: a near-linear classifier replaces the inverse
network, steering the hijacked feature space to expose one binary attribute
(or several, via independent sigmoid heads behind the single dense layer).
The discriminator and forged-gradient machinery are unchanged."""

import numpy as np

from ..errors import ShapeMismatchError, SplitSimError
from ..nn import Adam, bce_from_logits, build_architecture
from .fsha import LR, GP_WEIGHT, _check_finite, discriminator_step, forge_gradient

F32 = np.float32


class AttrAttackState:
    """Server bundle for property inference: pilot, C_att, discriminator."""

    def __init__(self, image_shape, smashed_shape, rng, n_attributes=1,
                 gp_weight=GP_WEIGHT, lr=LR):
        self.f_tilde = build_architecture("f_tilde", image_shape, rng)
        if self.f_tilde.output_shape != tuple(smashed_shape):
            raise ShapeMismatchError(
                f"pilot output {self.f_tilde.output_shape} != smashed {smashed_shape}")
        self.c_att = build_architecture("C_att", smashed_shape, rng,
                                        channels_out=n_attributes)
        self.discriminator = build_architecture("D", smashed_shape, rng)
        self.opt_tilde = Adam(self.f_tilde.params(), lr=lr)
        self.opt_c = Adam(self.c_att.params(), lr=lr)
        self.opt_d = Adam(self.discriminator.params(), lr=lr)
        self.gp_weight = gp_weight
        self.gp_rng = np.random.default_rng(rng.integers(2**63))
        self.iteration = 0


def classifier_step(state, pub_x, pub_y):
    """Joint pilot + C_att update minimizing attribute BCE."""
    y = np.asarray(pub_y)
    if y.ndim == 1:
        y = y[:, None]
    if not np.isin(y, (0, 1)).all():
        raise SplitSimError("attribute labels must be binary")
    z = state.f_tilde.forward(pub_x, record=True)
    logits = state.c_att.forward(z, record=True, logits=True)
    bce, dlogits = bce_from_logits(logits, y)
    _check_finite("attribute BCE", bce)
    state.f_tilde.zero_grads()
    state.c_att.zero_grads()
    gz = state.c_att.backward(dlogits)
    state.f_tilde.backward(gz, need_input_grad=False)
    state.opt_c.step(state.c_att.grads())
    state.opt_tilde.step(state.f_tilde.grads())
    return bce


def attacker_setup_step_attr(state, smashed, pub_x, pub_y):
    """One property-inference setup iteration; the forged gradient has no
    dependency on anything but the smashed batch and D."""
    bce = classifier_step(state, pub_x, pub_y)
    d_loss, gp = discriminator_step(state, smashed, pub_x)
    forged, f_loss, mean_d_priv = forge_gradient(state, smashed)
    _check_finite("forged gradient", forged)
    state.iteration += 1
    metrics = {
        "bce_loss": bce,
        "d_loss": d_loss,
        "gp": gp,
        "f_loss": f_loss,
        "mean_D_priv": mean_d_priv,
    }
    return forged, metrics


def infer_attribute(state, smashed):
    """Per-example attribute probability straight from smashed data."""
    if smashed.shape[1:] != tuple(state.c_att.input_shape):
        raise ShapeMismatchError(
            f"smashed shape {smashed.shape[1:]} != classifier input "
            f"{state.c_att.input_shape}")
    p = state.c_att.forward(smashed)
    return p[:, 0] if p.shape[1] == 1 else p


def attribute_accuracy(probabilities, true_labels):
    """Fraction of (prob > 0.5) decisions matching the labels."""
    p = np.asarray(probabilities)
    y = np.asarray(true_labels)
    if p.size == 0:
        raise SplitSimError("empty probability vector")
    if p.shape != y.shape:
        raise ShapeMismatchError(f"shape mismatch {p.shape} vs {y.shape}")
    return float(np.mean((p > 0.5) == (y > 0.5)))

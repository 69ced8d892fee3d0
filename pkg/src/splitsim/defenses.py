"""Client-side defenses: distance-correlation regularization of the smashed
data and DP-style gradient sanitization (clip + Gaussian noise).

Both plug into the client's update path: the regularizer adds its gradient to
the cut-layer gradient before backprop through f; the sanitizer rewrites f's
parameter gradients before the optimizer step.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SplitSimError

log = logging.getLogger("splitsim.defenses")

F32 = np.float32


def _pairwise_dist(m):
    sq = (m * m).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (m @ m.T)
    return np.sqrt(np.maximum(d2, 0.0))


def _center(d):
    return d - d.mean(axis=0, keepdims=True) - d.mean(axis=1, keepdims=True) + d.mean()


def _dcor_terms(x, z):
    n = len(x)
    if n < 2:
        raise SplitSimError("distance correlation needs a batch of at least 2")
    if len(z) != n:
        raise SplitSimError(f"batch mismatch: {n} vs {len(z)}")
    xf = x.reshape(n, -1).astype(np.float64)
    zf = z.reshape(n, -1).astype(np.float64)
    a = _pairwise_dist(xf)
    b = _pairwise_dist(zf)
    A = _center(a)
    B = _center(b)
    s_xz = max(float((A * B).mean()), 0.0)
    s_xx = float((A * A).mean())
    s_zz = float((B * B).mean())
    return xf, zf, a, b, A, B, s_xz, s_xx, s_zz


def distance_correlation(x_batch, z_batch):
    """Empirical distance correlation in [0, 1]; 0 when either variance term
    vanishes (constant batches)."""
    *_, s_xz, s_xx, s_zz = _dcor_terms(x_batch, z_batch)
    if s_xx <= 1e-12 or s_zz <= 1e-12 or s_xz <= 0.0:
        return 0.0
    return float(np.sqrt(s_xz) / (s_xx * s_zz) ** 0.25)


def dcor_and_grad(x_batch, z_batch):
    """Distance correlation and its gradient w.r.t. the z batch."""
    xf, zf, a, b, A, B, s_xz, s_xx, s_zz = _dcor_terms(x_batch, z_batch)
    if s_xx <= 1e-12 or s_zz <= 1e-12 or s_xz <= 1e-12:
        return 0.0, np.zeros_like(z_batch, dtype=F32)
    val = float(np.sqrt(s_xz) / (s_xx * s_zz) ** 0.25)
    n = len(xf)
    # dVal/dB, then through the (self-adjoint) double centering to db
    u = (val / (n * n)) * (A / (2.0 * s_xz) - B / (2.0 * s_zz))
    w = _center(u)
    # b_kl = ||z_k - z_l||: w symmetric, so dz_k = sum_l 2 w_kl (z_k - z_l)/b_kl
    inv_b = np.where(b > 1e-12, 1.0 / np.maximum(b, 1e-12), 0.0)
    coef = 2.0 * w * inv_b
    dz = coef.sum(axis=1, keepdims=True) * zf - coef @ zf
    return val, dz.reshape(z_batch.shape).astype(F32)


def dp_sanitize(param_grads, clip_norm, noise_multiplier, rng):
    """Global-norm clip then elementwise Gaussian noise of std
    noise_multiplier * clip_norm. noise_multiplier == 0 under the clip is the
    identity."""
    if clip_norm <= 0:
        raise ConfigError("clip_norm must be positive")
    total = np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in param_grads))
    scale = F32(min(1.0, clip_norm / total)) if total > 0 else F32(1.0)
    out = [g * scale for g in param_grads]
    if noise_multiplier > 0:
        std = noise_multiplier * clip_norm
        out = [g + rng.normal(0.0, std, size=g.shape).astype(F32) for g in out]
    return out


@dataclass
class DefenseConfig:
    kind: str = "none"            # none | dcor | dp_noise
    alpha1: float = 0.0
    clip_norm: float = 1.0
    noise_multiplier: float = 0.0

    def validate(self):
        if self.kind not in ("none", "dcor", "dp_noise"):
            raise ConfigError(f"unknown defense kind {self.kind!r}")
        if self.alpha1 < 0:
            raise ConfigError("alpha1 must be >= 0")
        if self.clip_norm <= 0:
            raise ConfigError("clip_norm must be > 0")
        if self.noise_multiplier < 0:
            raise ConfigError("noise_multiplier must be >= 0")
        return self


class Defense:
    """Stateful plug-in handed to a Client; seeded for determinism."""

    def __init__(self, config, seed=0):
        self.config = config.validate()
        self.rng = np.random.default_rng(seed)
        self.last_dcor = None

    def adjust_cut_gradient(self, x, smashed, grad):
        if self.config.kind != "dcor" or self.config.alpha1 == 0:
            return grad
        val, dz = dcor_and_grad(x, smashed)
        self.last_dcor = val
        if not np.all(np.isfinite(dz)):
            log.warning("non-finite dCor gradient; regularizer skipped this step")
            return grad
        return grad + F32(self.config.alpha1) * dz

    def sanitize_param_grads(self, grads):
        if self.config.kind != "dp_noise":
            return grads
        return dp_sanitize(grads, self.config.clip_norm,
                           self.config.noise_multiplier, self.rng)

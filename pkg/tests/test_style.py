"""Style extension: Gram oracle, tap weighting, frozen probe, degenerate
weight equivalence."""

import numpy as np
import pytest

from splitsim.attacks import fsha
from splitsim.attacks.style import (
    VisionProbe,
    attacker_setup_step_style,
    gram_matrix,
    style_loss,
    style_loss_and_grad,
)
from splitsim.errors import ShapeMismatchError
from splitsim.nn import build_vision_probe

F32 = np.float32


def probe(img=16, seed=0):
    return VisionProbe(build_vision_probe((img, img, 1), 10, np.random.default_rng(seed)))


def test_gram_constant_single_channel():
    a = 0.7
    f = np.full((1, 3, 3, 1), a, dtype=F32)
    g = gram_matrix(f)
    assert g.shape == (1, 1, 1)
    assert abs(float(g) - a * a * 9 / 9) < 1e-6  # = a^2


def test_gram_orthogonal_channels_off_diagonal_zero():
    f = np.zeros((1, 2, 2, 2), dtype=F32)
    f[0, :, 0, 0] = 1.0  # channel 0 lives on column 0
    f[0, :, 1, 1] = 1.0  # channel 1 on column 1; pointwise products vanish
    g = gram_matrix(f)[0]
    assert g[0, 1] == 0.0 and g[1, 0] == 0.0
    assert g[0, 0] > 0 and g[1, 1] > 0


def test_gram_matches_brute_force_double_loop():
    rng = np.random.default_rng(1)
    f = rng.normal(size=(1, 4, 4, 3)).astype(F32)
    g = gram_matrix(f)[0]
    brute = np.zeros((3, 3))
    for c in range(3):
        for d in range(3):
            brute[c, d] = float((f[0, :, :, c] * f[0, :, :, d]).sum()) / 16
    assert np.abs(g - brute).max() < 1e-6
    # symmetry
    assert np.abs(g - g.T).max() < 1e-6


def test_gram_rejects_non_rank4():
    with pytest.raises(ShapeMismatchError):
        gram_matrix(np.zeros((2, 3, 4), dtype=F32))


def test_style_loss_identical_inputs_zero():
    p = probe()
    x = np.random.default_rng(2).uniform(-1, 1, size=(3, 16, 16, 1)).astype(F32)
    assert style_loss(p, x, x.copy()) < 1e-12


def test_style_loss_positive_on_intensity_doubling():
    p = probe()
    rng = np.random.default_rng(3)
    x = rng.uniform(-0.5, 0.5, size=(3, 16, 16, 1)).astype(F32)
    assert style_loss(p, np.clip(2 * x, -1, 1), x) > 0


def test_style_grad_matches_finite_differences():
    p = probe(img=8)
    rng = np.random.default_rng(4)
    a = rng.uniform(-0.5, 0.5, size=(2, 8, 8, 1)).astype(F32)
    b = rng.uniform(-0.5, 0.5, size=(2, 8, 8, 1)).astype(F32)
    loss, grad = style_loss_and_grad(p, a, b)
    h = 1e-3
    idx = [(0, 2, 3, 0), (1, 5, 1, 0), (0, 0, 0, 0), (1, 7, 7, 0)]
    for i in idx:
        ap = a.copy()
        ap[i] += h
        am = a.copy()
        am[i] -= h
        fd = (style_loss(p, ap, b) - style_loss(p, am, b)) / (2 * h)
        assert abs(fd - float(grad[i])) < max(2e-2 * abs(fd), 2e-4)


def test_tap_permutation_invariance():
    g = build_vision_probe((16, 16, 1), 10, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    a = rng.uniform(-1, 1, size=(2, 16, 16, 1)).astype(F32)
    b = rng.uniform(-1, 1, size=(2, 16, 16, 1)).astype(F32)
    l1 = style_loss(VisionProbe(g, taps=(0, 1, 2, 3, 4)), a, b)
    l2 = style_loss(VisionProbe(g, taps=(4, 2, 0, 3, 1)), a, b)
    assert abs(l1 - l2) < 1e-9


def test_probe_frozen_through_attack_steps():
    p = probe()
    state = fsha.AttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(7))
    rng = np.random.default_rng(8)
    for _ in range(2):
        smashed = rng.normal(size=(4, 2, 2, 256)).astype(F32)
        pub = rng.uniform(-1, 1, size=(4, 16, 16, 1)).astype(F32)
        attacker_setup_step_style(state, p, smashed, pub)
    assert p.param_checksum() == p.checksum


def test_style_weight_zero_equals_plain_bitwise():
    seeds = np.random.default_rng(9)
    s1 = fsha.AttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(10))
    s2 = fsha.AttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(10))
    p = probe()
    rng1 = np.random.default_rng(11)
    rng2 = np.random.default_rng(11)
    sm1 = rng1.normal(size=(4, 2, 2, 256)).astype(F32)
    pub1 = rng1.uniform(-1, 1, size=(4, 16, 16, 1)).astype(F32)
    sm2 = rng2.normal(size=(4, 2, 2, 256)).astype(F32)
    pub2 = rng2.uniform(-1, 1, size=(4, 16, 16, 1)).astype(F32)
    f1, _ = fsha.attacker_setup_step(s1, sm1, pub1)
    f2, _ = attacker_setup_step_style(s2, p, sm2, pub2, style_weight=0)
    np.testing.assert_array_equal(f1, f2)


def test_channel_tiling_adapts_grayscale():
    g = build_vision_probe((16, 16, 3), 10, np.random.default_rng(12))
    p = VisionProbe(g)
    x = np.random.default_rng(13).uniform(-1, 1, size=(2, 16, 16, 1)).astype(F32)
    adapted, reps = p.adapt(x)
    assert adapted.shape == (2, 16, 16, 3) and reps == 3
    back = p.unadapt_grad(np.ones_like(adapted), reps, x.shape)
    np.testing.assert_allclose(back, 3.0)

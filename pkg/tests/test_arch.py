"""Shape contracts of every architecture role, traced by hand:

f on 32x32: conv s1 keeps 32, pool halves -> 16, 8, 4; channels 64/128/256,
so (b, 32, 32, c) -> (b, 4, 4, 256). The pilot network halves three times via
stride-2 convs: 32 -> 16 -> 8 -> 4 with 128/128/256 channels. The inverse
network doubles three times: 4 -> 8 -> 16 -> 32.
"""

import numpy as np
import pytest

from splitsim.errors import ConfigError
from splitsim.nn import build_architecture, build_generator, build_vision_probe, smashed_shape_for

F32 = np.float32


def rng():
    return np.random.default_rng(0)


@pytest.mark.parametrize("size", [32, 64])
def test_f_output_shape(size):
    g = build_architecture("f", (size, size, 3), rng())
    x = np.zeros((8, size, size, 3), dtype=F32)
    assert g.forward(x).shape == (8, size // 8, size // 8, 256)


def test_f_matches_table_trace_on_rgb_32():
    g = build_architecture("f", (32, 32, 3), rng())
    assert g.forward(np.zeros((8, 32, 32, 3), dtype=F32)).shape == (8, 4, 4, 256)


@pytest.mark.parametrize("size", [16, 32, 64])
def test_pilot_matches_f_feature_count(size):
    # |f_tilde(x)| == |f(x)| for every input size
    f = build_architecture("f", (size, size, 1), rng())
    ft = build_architecture("f_tilde", (size, size, 1), rng())
    x = np.zeros((2, size, size, 1), dtype=F32)
    assert f.forward(x).shape == ft.forward(x).shape == (2, size // 8, size // 8, 256)
    assert smashed_shape_for((size, size, 1)) == (size // 8, size // 8, 256)


@pytest.mark.parametrize("c", [1, 3])
def test_inverse_reconstructs_image_shape(c):
    inv = build_architecture("f_tilde_inv", (4, 4, 256), rng(), channels_out=c)
    y = inv.forward(np.zeros((2, 4, 4, 256), dtype=F32))
    assert y.shape == (2, 32, 32, c)
    assert float(y.min()) >= -1.0 and float(y.max()) <= 1.0  # tanh head


def test_discriminator_outputs_unit_interval_scalar():
    d = build_architecture("D", (4, 4, 256), rng())
    x = np.random.default_rng(1).normal(size=(3, 4, 4, 256)).astype(F32) * 5
    p = d.forward(x)
    assert p.shape == (3, 1)
    assert np.all((p > 0) & (p < 1))


def test_attribute_classifier_is_single_dense_sigmoid():
    c = build_architecture("C_att", (4, 4, 256), rng())
    dense = [l for l in c.layers if l.kind == "dense"]
    assert len(dense) == 1 and dense[0].activation == "sigmoid"
    # affine decision function: logit(a + b) - logit(a) - logit(b) + logit(0) == 0
    r = np.random.default_rng(2)
    a = r.normal(size=(1, 4, 4, 256)).astype(F32)
    b = r.normal(size=(1, 4, 4, 256)).astype(F32)
    z = np.zeros_like(a)

    def logit(x):
        return float(c.forward(x, logits=True)[0, 0])

    gap = logit(a + b) - logit(a) - logit(b) + logit(z)
    assert abs(gap) < 1e-3


def test_unknown_role_rejected():
    with pytest.raises(ConfigError):
        build_architecture("s", (4, 4, 256), rng())


def test_generator_emits_bounded_images():
    g = build_generator(64, (16, 16, 1), rng())
    z = np.random.default_rng(3).normal(size=(4, 64)).astype(F32)
    x = g.forward(z)
    assert x.shape == (4, 16, 16, 1)
    assert float(x.min()) >= -1.0 and float(x.max()) <= 1.0


def test_generator_zero_weights_gives_mid_gray():
    g = build_generator(64, (16, 16, 1), rng())
    for p in g.params():
        p[...] = 0.0
    z = np.random.default_rng(4).normal(size=(2, 64)).astype(F32)
    assert np.all(g.forward(z) == 0.0)  # tanh(0)


def test_vision_probe_has_five_conv_taps():
    v = build_vision_probe((16, 16, 1), 10, rng())
    assert all(v.layers[i].kind == "conv" for i in range(5))

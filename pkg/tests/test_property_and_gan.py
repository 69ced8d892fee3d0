"""Property inference and GAN client attack: unit-level oracles."""

import numpy as np
import pytest

from splitsim.attacks import gan_client, property_inference as pi
from splitsim.errors import ShapeMismatchError, SplitSimError
from splitsim.nn import Adam, ModuleGraph, Dense, Flatten, bce_from_logits, build_architecture
from splitsim.protocol import Client, HonestServerB, inproc_pair

F32 = np.float32


def test_constant_half_classifier_bce_is_ln2():
    state = pi.AttrAttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(0))
    for p in state.c_att.params():
        p[...] = 0.0
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, size=(6, 16, 16, 1)).astype(F32)
    y = rng.integers(0, 2, size=6)
    bce = pi.classifier_step(state, x, y)
    assert abs(bce - np.log(2)) < 1e-5


def test_two_gaussian_blobs_separate_within_200_steps():
    # feature space with linearly separable attribute: BCE -> 0, accuracy -> 1
    rng = np.random.default_rng(2)
    c_att = build_architecture("C_att", (2, 2, 8), rng)
    opt = Adam(c_att.params(), lr=3e-3)
    data_rng = np.random.default_rng(3)
    mu0 = data_rng.normal(size=(2, 2, 8)).astype(F32)
    mu1 = -mu0
    for step in range(200):
        y = data_rng.integers(0, 2, size=32)
        x = np.where(y[:, None, None, None] == 1, mu1, mu0) + \
            0.3 * data_rng.normal(size=(32, 2, 2, 8)).astype(F32)
        logits = c_att.forward(x.astype(F32), record=True, logits=True)
        bce, dl = bce_from_logits(logits, y)
        c_att.zero_grads()
        c_att.backward(dl, need_input_grad=False)
        opt.step(c_att.grads())
    y = data_rng.integers(0, 2, size=256)
    x = np.where(y[:, None, None, None] == 1, mu1, mu0) + \
        0.3 * data_rng.normal(size=(256, 2, 2, 8)).astype(F32)
    probs = c_att.forward(x.astype(F32))[:, 0]
    assert bce < 0.1
    assert pi.attribute_accuracy(probs, y) > 0.95


def test_attr_step_rejects_non_binary_labels():
    state = pi.AttrAttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(4))
    rng = np.random.default_rng(5)
    with pytest.raises(SplitSimError):
        pi.classifier_step(state, rng.uniform(-1, 1, (4, 16, 16, 1)).astype(F32),
                           np.array([0, 1, 2, 1]))


def test_forged_grad_identical_form_to_plain_fsha():
    # the forged-gradient path reads only D and the smashed batch: the step's
    # output equals plain FSHA's forge applied to the same post-update state,
    # and private labels never enter the attack signature at all
    from splitsim.attacks import fsha

    state = pi.AttrAttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(6))
    rng = np.random.default_rng(7)
    smashed = rng.normal(size=(4, 2, 2, 256)).astype(F32)
    x = rng.uniform(-1, 1, (4, 16, 16, 1)).astype(F32)
    forged, _ = pi.attacker_setup_step_attr(state, smashed, x, np.array([0, 1, 0, 1]))
    again, _, _ = fsha.forge_gradient(state, smashed)
    np.testing.assert_array_equal(forged, again)


def test_infer_attribute_thresholding_and_accuracy():
    probs = np.array([0.9, 0.2, 0.6])
    labels = np.array([1, 0, 0])
    assert abs(pi.attribute_accuracy(probs, labels) - 2 / 3) < 1e-12
    assert pi.attribute_accuracy(np.array([0.9, 0.1]), np.array([1, 0])) == 1.0
    assert pi.attribute_accuracy(np.array([0.1, 0.9]), np.array([1, 0])) == 0.0
    with pytest.raises(SplitSimError):
        pi.attribute_accuracy(np.array([]), np.array([]))


def test_untrained_accuracy_near_chance():
    state = pi.AttrAttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(8))
    rng = np.random.default_rng(9)
    smashed = rng.normal(size=(2048, 2, 2, 256)).astype(F32) * 0.1
    y = rng.integers(0, 2, size=2048)
    acc = pi.attribute_accuracy(pi.infer_attribute(state, smashed), y)
    assert abs(acc - 0.5) <= 0.05


def test_multi_attribute_heads():
    state = pi.AttrAttackState((16, 16, 1), (2, 2, 256), np.random.default_rng(10),
                               n_attributes=3)
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, (4, 16, 16, 1)).astype(F32)
    y = rng.integers(0, 2, size=(4, 3))
    bce = pi.classifier_step(state, x, y)
    assert np.isfinite(bce)
    p = pi.infer_attribute(state, rng.normal(size=(5, 2, 2, 256)).astype(F32))
    assert p.shape == (5, 3)


# -- GAN client attack -------------------------------------------------------


def build_session(seed=0, img=16, n_classes=4):
    rng = np.random.default_rng(seed)
    from splitsim.nn import Conv2D
    f = ModuleGraph([Conv2D(8, 3, 2, "relu"), Conv2D(16, 3, 2, "relu"),
                     Conv2D(16, 3, 2, "relu")], (img, img, 1), rng)
    s = ModuleGraph([Flatten(), Dense(32, "relu")], f.output_shape, rng)
    f_prime = ModuleGraph([Dense(n_classes, "linear")], (32,), rng)
    client = Client(0, f, lr=1e-3, f_prime=f_prime)
    server = HonestServerB(s, lr=1e-3)
    gen = gan_client.GeneratorState((img, img, 1), rng, noise_dim=16,
                                    target_class=2, poison_class=0, lr=1e-3)
    return client, server, gen


def test_adaptive_poison_split_halves():
    batch = np.arange(10)
    a, b = gan_client.adaptive_poison_split(batch)
    assert len(a) == len(b) == 5
    a, b = gan_client.adaptive_poison_split(np.arange(7))  # odd drops last
    assert len(a) == len(b) == 3


def test_generator_samples_bounded_every_iteration():
    client, server, gen = build_session(1)
    epc, eps = inproc_pair()
    for _ in range(3):
        gan_client.malicious_client_iteration(gen, client, server, epc, eps, 8)
        x = gen.sample(4)
        assert float(x.min()) >= -1.0 and float(x.max()) <= 1.0


def test_saturated_composite_gives_zero_generator_gradient():
    client, server, gen = build_session(2)
    # force f' to output an enormous logit for the target class regardless of
    # input: softmax saturates at p=1, CE gradient is exactly zero in f32
    w, b = client.f_prime.params()
    w[...] = 0.0
    b[...] = 0.0
    b[gen.target_class] = 200.0
    before = [p.copy() for p in gen.g.params()]
    epc, eps = inproc_pair()
    gan_client.generator_round(gen, client, server, epc, eps, 8)
    for a, pb in zip(gen.g.params(), before):
        np.testing.assert_array_equal(a, pb)


def test_poison_half_labels_all_equal_poison_class():
    client, server, gen = build_session(3)
    seen = {}
    orig_drive = None

    import splitsim.protocol.session as sess
    orig_drive = sess.drive_round

    def spy(client_, server_, epc_, eps_, batch, variant):
        seen["labels"] = batch[1]
        return orig_drive(client_, server_, epc_, eps_, batch, variant)

    import splitsim.attacks.gan_client as gc
    epc, eps = inproc_pair()
    try:
        sess.drive_round = spy
        # gan_client imports drive_round lazily from the session module
        gc.malicious_client_iteration(gen, client, server, epc, eps, 8, adaptive=True)
    finally:
        sess.drive_round = orig_drive
    assert np.all(seen["labels"] == gen.poison_class)


def test_confidence_evaluation_no_weight_change():
    client, server, gen = build_session(4)
    snap_f = client.f.snapshot()
    snap_g = gen.g.snapshot()
    c = gan_client.composite_confidence(client, server.s, gen, n=16)
    assert 0.0 <= c <= 1.0
    for a, b in zip(client.f.params(), snap_f):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(gen.g.params(), snap_g):
        np.testing.assert_array_equal(a, b)

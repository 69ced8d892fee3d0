"""GAN-based attack by a malicious client in the private-label protocol.

The attacker occupies one round-robin slot in an ongoing session. On its turn
it samples from a local generator, pushes the samples through the distributed
composite f'(s(f(.))) exactly like a normal training batch, and maximizes the
composite's confidence on a target class; the returned distributed gradient
trains both f (per protocol) and, continued through the sample, the generator.
The adaptive variant spends half of each batch poisoning the composite by
labeling generator output as an attacker-controlled class through the normal
client training step.
"""

import numpy as np

from ..errors import SplitSimError
from ..nn import Adam, build_generator, softmax_cross_entropy
from ..protocol.frames import Kind, Message
from ..protocol.session import _expect

F32 = np.float32


class GeneratorState:
    """Attacker-local generator with its optimizer and class bookkeeping."""

    def __init__(self, image_shape, rng, noise_dim=64, target_class=3,
                 poison_class=0, lr=1e-4):
        if target_class == poison_class:
            raise SplitSimError("target and poison classes must differ")
        self.g = build_generator(noise_dim, image_shape, rng)
        self.opt = Adam(self.g.params(), lr=lr)
        self.noise_dim = noise_dim
        self.target_class = target_class
        self.poison_class = poison_class
        self.noise_rng = np.random.default_rng(rng.integers(2**63))

    def sample(self, n, record=False):
        noise = self.noise_rng.normal(size=(n, self.noise_dim)).astype(F32)
        return self.g.forward(noise, record=record)


def adaptive_poison_split(batch):
    """Halve a batch: first half drives the generator flow, second half is
    poison data. Odd batches lose their last element."""
    n = (len(batch) // 2) * 2
    half = n // 2
    return batch[:half], batch[half:n]


def generator_round(gen, client, server, ep_client, ep_server, batch_size):
    """Algorithm-2 iteration: distributed forward/backward on G samples with
    confidence on the target class as the maximized objective."""
    x = gen.sample(batch_size, record=True)
    z = client.f.forward(x, record=True)
    ep_client.send(Message(Kind.SMASHED, [z], client.round, client.client_id))
    server.first_phase(ep_server)
    act = _expect(ep_client.recv(), Kind.SERVER_ACT).payload[0]
    logits = client.f_prime.forward(act, record=True)
    y_t = np.full(len(x), gen.target_class, dtype=np.int64)
    # maximize log p_{y_t}: descend on the cross-entropy toward y_t
    loss, dlogits = softmax_cross_entropy(logits, y_t)
    client.f_prime.zero_grads()
    gact = client.f_prime.backward(dlogits)
    client.opt_prime.step(client.f_prime.grads())
    ep_client.send(Message(Kind.CLIENT_GRAD, [gact], client.round, client.client_id))
    server.second_phase(ep_server)
    grad = _expect(ep_client.recv(), Kind.GRAD).payload[0]
    client.f.zero_grads()
    gx = client.f.backward(grad)
    client.opt.step(client.f.grads())
    gen.g.zero_grads()
    gen.g.backward(gx, need_input_grad=False)
    gen.opt.step(gen.g.grads())
    client.round += 1
    # confidence of the composite on the generator's samples
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    p = e / e.sum(axis=1, keepdims=True)
    confidence = float(np.mean(p[:, gen.target_class]))
    return loss, confidence


def malicious_client_iteration(gen, client, server, ep_client, ep_server,
                               batch_size, adaptive=False):
    """One attacker turn; with ``adaptive`` the second half-batch poisons the
    composite through the normal private-label training step."""
    from ..protocol.session import drive_round

    if adaptive:
        g_half = batch_size // 2
        loss, confidence = generator_round(gen, client, server, ep_client,
                                           ep_server, g_half)
        poison_x = gen.sample(batch_size - g_half)
        poison_y = np.full(len(poison_x), gen.poison_class, dtype=np.int64)
        drive_round(client, server, ep_client, ep_server, (poison_x, poison_y), "B")
    else:
        loss, confidence = generator_round(gen, client, server, ep_client,
                                           ep_server, batch_size)
    return loss, confidence


def composite_confidence(client, server_s, gen, n=256):
    """Mean softmax probability of the target class on fresh G samples,
    evaluated through the full composite without touching any weights."""
    x = gen.sample(n)
    z = client.f.forward(x)
    act = server_s.forward(z)
    logits = client.f_prime.forward(act)
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    p = e / e.sum(axis=1, keepdims=True)
    return float(np.mean(p[:, gen.target_class]))

"""Party roles and the split-learning state machines.

Variant A (label sharing): client sends smashed data + labels, the server
owns the task head and returns the gradient at the cut. Variant B (private
labels): the server returns its activation, the client computes the loss
through its own tail f' and sends the gradient back; the message sequence per
round is exactly [SMASHED, SERVER_ACT, CLIENT_GRAD, GRAD].

Model handoff between round-robin clients carries f's parameters in canonical
checkpoint order followed by the Adam moments and step counter, so the
training trajectory does not depend on which client object holds the model.
"""

import logging

import numpy as np

from ..errors import ProtocolViolation, ShapeMismatchError
from ..nn import Adam, softmax_cross_entropy
from .frames import Kind, Message, decode_frame, encode_frame

log = logging.getLogger("splitsim.protocol")

F32 = np.float32


def _expect(msg, kind):
    if msg.kind != kind:
        raise ProtocolViolation(f"expected {kind.name}, got {msg.kind.name}")
    return msg


class Client:
    """Client role: owns f (and f' in the private-label variant), never s."""

    def __init__(self, client_id, f, lr=1e-4, f_prime=None, defense=None):
        self.client_id = client_id
        self.f = f
        self.opt = Adam(f.params(), lr=lr)
        self.f_prime = f_prime
        self.opt_prime = Adam(f_prime.params(), lr=lr) if f_prime is not None else None
        self.defense = defense
        self.round = 0
        self._x = self._smashed = None

    def begin(self, ep, x, y=None, send_labels=False):
        """Forward the private batch and send SMASHED (+LABELS in variant A)."""
        self._x = x
        self._smashed = self.f.forward(x, record=True)
        ep.send(Message(Kind.SMASHED, [self._smashed], self.round, self.client_id))
        if send_labels:
            ep.send(Message(Kind.LABELS, [y.astype(F32)], self.round, self.client_id))

    def tail_step(self, ep, y):
        """Variant B middle phase: loss through f', CLIENT_GRAD back to s."""
        act = _expect(ep.recv(), Kind.SERVER_ACT).payload[0]
        logits = self.f_prime.forward(act, record=True)
        loss, dlogits = softmax_cross_entropy(logits, y)
        self.f_prime.zero_grads()
        gact = self.f_prime.backward(dlogits)
        self.opt_prime.step(self.f_prime.grads())
        ep.send(Message(Kind.CLIENT_GRAD, [gact], self.round, self.client_id))
        return loss

    def finish(self, ep):
        """Receive GRAD for the cut layer and update f (defense hooks apply)."""
        grad = _expect(ep.recv(), Kind.GRAD).payload[0]
        if grad.shape != self._smashed.shape:
            raise ShapeMismatchError(
                f"GRAD shape {grad.shape} != smashed shape {self._smashed.shape}")
        if self.defense is not None:
            grad = self.defense.adjust_cut_gradient(self._x, self._smashed, grad)
        self.f.zero_grads()
        self.f.backward(grad, need_input_grad=False)
        grads = self.f.grads()
        if self.defense is not None:
            grads = self.defense.sanitize_param_grads(grads)
        self.opt.step(grads)
        self.round += 1
        self._x = self._smashed = None

    # -- model handoff -------------------------------------------------------

    def handoff_payload(self):
        state = [p.copy() for p in self.f.params()]
        state += [m.copy() for m in self.opt.m]
        state += [v.copy() for v in self.opt.v]
        state.append(np.array([self.opt.t], dtype=F32))
        return state

    def receive_handoff(self, payload):
        n = len(self.f.params())
        if len(payload) != 3 * n + 1:
            raise ProtocolViolation(f"handoff payload arity {len(payload)} != {3 * n + 1}")
        self.f.load_params(payload[:n])
        for dst, src in zip(self.opt.m, payload[n : 2 * n]):
            dst[...] = src
        for dst, src in zip(self.opt.v, payload[2 * n : 3 * n]):
            dst[...] = src
        self.opt.t = int(payload[-1][0])

    def optimizer_state(self):
        return ([m.copy() for m in self.opt.m], [v.copy() for v in self.opt.v], self.opt.t)

    def restore(self, params, opt_state):
        self.f.load_params(params)
        m, v, t = opt_state
        for dst, src in zip(self.opt.m, m):
            dst[...] = src
        for dst, src in zip(self.opt.v, v):
            dst[...] = src
        self.opt.t = t


class HonestServerA:
    """Variant A server: owns the task head s and computes the shared loss."""

    variant = "A"

    def __init__(self, s, lr=1e-4):
        self.s = s
        self.opt = Adam(s.params(), lr=lr)
        self.last_loss = None

    def handle_round(self, ep):
        smashed = _expect(ep.recv(), Kind.SMASHED)
        labels_msg = ep.recv()
        if labels_msg.kind != Kind.LABELS:
            raise ProtocolViolation("variant A round is missing LABELS")
        y = labels_msg.payload[0].astype(np.int64)
        logits = self.s.forward(smashed.payload[0], record=True)
        loss, dlogits = softmax_cross_entropy(logits, y)
        self.s.zero_grads()
        gin = self.s.backward(dlogits)
        self.opt.step(self.s.grads())
        ep.send(Message(Kind.GRAD, [gin], smashed.round, smashed.client_id))
        self.last_loss = loss
        return loss


class HonestServerB:
    """Variant B server: owns the trunk s; the loss lives on the client."""

    variant = "B"

    def __init__(self, s, lr=1e-4):
        self.s = s
        self.opt = Adam(s.params(), lr=lr)

    def first_phase(self, ep):
        smashed = _expect(ep.recv(), Kind.SMASHED)
        act = self.s.forward(smashed.payload[0], record=True)
        ep.send(Message(Kind.SERVER_ACT, [act], smashed.round, smashed.client_id))
        self._meta = (smashed.round, smashed.client_id)

    def second_phase(self, ep):
        gact = _expect(ep.recv(), Kind.CLIENT_GRAD).payload[0]
        self.s.zero_grads()
        gin = self.s.backward(gact)
        self.opt.step(self.s.grads())
        ep.send(Message(Kind.GRAD, [gin], *self._meta))

    def handle_round(self, ep):
        self.first_phase(ep)
        self.second_phase(ep)


def drive_round(client, server, ep_client, ep_server, batch, variant):
    """One interleaved round over an in-process channel pair; returns the
    client-visible loss for variant B, the server loss for variant A."""
    x, y = batch
    if variant == "A":
        client.begin(ep_client, x, y, send_labels=True)
        loss = server.handle_round(ep_server)
        client.finish(ep_client)
        return loss
    client.begin(ep_client, x)
    server.first_phase(ep_server)
    loss = client.tail_step(ep_client, y)
    server.second_phase(ep_server)
    client.finish(ep_client)
    return loss


def private_label_round(client, server, ep_client, ep_server, batch):
    """Variant B round with rollback: on a protocol violation every party
    restores its round-start state before the error is re-raised."""
    c_params = client.f.snapshot()
    c_opt = client.optimizer_state()
    fp_params = client.f_prime.snapshot()
    s_params = server.s.snapshot() if hasattr(server, "s") else None
    try:
        return drive_round(client, server, ep_client, ep_server, batch, "B")
    except ProtocolViolation:
        client.restore(c_params, c_opt)
        client.f_prime.load_params(fp_params)
        if s_params is not None:
            server.s.load_params(s_params)
        raise


def run_client_round(client, ep, batch, variant):
    """Blocking client-side round for socket transports (the peer's server
    loop runs in another process)."""
    x, y = batch
    if variant == "A":
        client.begin(ep, x, y, send_labels=True)
        client.finish(ep)
        return None
    client.begin(ep, x)
    loss = client.tail_step(ep, y)
    client.finish(ep)
    return loss


def handoff(src_client, dst_client, round_no=0):
    """Move f (with optimizer state) between clients through the wire format."""
    msg = Message(Kind.MODEL_HANDOFF, src_client.handoff_payload(), round_no,
                  src_client.client_id)
    dst_client.receive_handoff(decode_frame(encode_frame(msg)).payload)


def round_robin(clients, server, streams, iterations, ep_client, ep_server,
                variant="A", turns_per_client=1, on_iteration=None):
    """Sequential multi-client training with model handoff between turns.

    ``server`` is any object with the variant's phase interface; attack
    servers plug in unchanged. A failing turn is skipped and logged.
    """
    it = 0
    idx = 0
    n = len(clients)
    while it < iterations:
        client = clients[idx]
        stream = streams[idx]
        for _ in range(turns_per_client):
            if it >= iterations:
                break
            batch = next(stream)
            try:
                drive_round(client, server, ep_client, ep_server, batch, variant)
            except (ProtocolViolation, OSError) as exc:
                log.warning("client %d turn skipped: %s", client.client_id, exc)
                break
            if on_iteration is not None:
                on_iteration(it, client)
            it += 1
        nxt = clients[(idx + 1) % n]
        if nxt is not client:
            handoff(client, nxt, it)
        idx = (idx + 1) % n


class FedAverager:
    """Aggregation role for splitfed: uniform average of the client models."""

    @staticmethod
    def average(clients):
        params = [c.f.params() for c in clients]
        for tensors in zip(*params):
            mean = np.mean([t.astype(np.float64) for t in tensors], axis=0).astype(F32)
            for t in tensors:
                t[...] = mean


def splitfed_round(clients, server, streams, ep_client, ep_server, fed=FedAverager,
                   variant="A"):
    """One splitfed round: every client steps on its own batch, then the
    aggregation role averages f uniformly and redistributes. Any failure
    inside the round discards the whole round."""
    snapshots = [(c.f.snapshot(), c.optimizer_state()) for c in clients]
    try:
        batches = [next(s) for s in streams]
        if hasattr(server, "handle_parallel"):
            server.handle_parallel(clients, batches, ep_client, ep_server)
        else:
            for client, batch in zip(clients, batches):
                drive_round(client, server, ep_client, ep_server, batch, variant)
    except (ProtocolViolation, OSError) as exc:
        log.warning("splitfed round discarded: %s", exc)
        for client, (params, opt_state) in zip(clients, snapshots):
            client.restore(params, opt_state)
        return False
    fed.average(clients)
    return True

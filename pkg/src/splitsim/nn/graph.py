"""Sequential differentiable module with a single-use backward tape."""

import numpy as np

from ..errors import ShapeMismatchError, TapeError

F32 = np.float32


class ModuleGraph:
    """Ordered stack of layers with forward/backward/update contracts.

    The tape recorded by ``forward(record=True)`` is consumed by exactly one
    ``backward`` (or tangent/pair pass sequence); a second backward without a
    fresh forward raises TapeError.
    """

    def __init__(self, layers, input_shape, rng):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.build(shape, rng)
        self.output_shape = shape
        self._tape = None
        self._fwd_out_shape = None
        self._fwd_in_shape = None

    # -- parameter access ---------------------------------------------------

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def grads(self):
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def num_params(self):
        return sum(int(p.size) for p in self.params())

    def snapshot(self):
        """Copies of all parameters, in canonical (layer, param) order."""
        return [p.copy() for p in self.params()]

    def load_params(self, tensors):
        params = self.params()
        if len(tensors) != len(params):
            raise ShapeMismatchError(
                f"expected {len(params)} parameter tensors, got {len(tensors)}"
            )
        for i, (p, t) in enumerate(zip(params, tensors)):
            t = np.asarray(t, dtype=F32)
            if t.shape != p.shape:
                raise ShapeMismatchError(
                    f"parameter {i}: expected shape {p.shape}, got {t.shape}"
                )
            p[...] = t

    # -- evaluation ----------------------------------------------------------

    def forward(self, x, record=False, logits=False):
        """Run the stack. ``logits=True`` skips the final layer's activation.

        With ``record=True`` intermediates are retained so one backward pass
        (or one tangent/pair-backward sequence) is valid afterwards.
        """
        x = np.ascontiguousarray(x, dtype=F32)
        if x.shape[1:] != self.input_shape:
            raise ShapeMismatchError(
                f"input: expected {self.input_shape} per example, got {x.shape[1:]}"
            )
        tape = [] if record else None
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            if h.shape[1:] != layer.in_shape:
                raise ShapeMismatchError(
                    f"layer {i} ({layer.kind}): expected {layer.in_shape}, got {h.shape[1:]}"
                )
            ctx = {} if record else None
            if logits and i == last and layer.kind in ("dense", "conv", "convt"):
                h = layer.forward(h, ctx, skip_act=True)
            else:
                h = layer.forward(h, ctx)
            if record:
                ctx["y"] = h
                tape.append((layer, ctx))
        if record:
            self._tape = tape
            self._fwd_out_shape = h.shape
            self._fwd_in_shape = x.shape
        return h

    def _take_tape(self):
        if self._tape is None:
            raise TapeError("backward called without a recorded forward")
        tape = self._tape
        self._tape = None
        return tape

    def discard_tape(self):
        self._tape = None

    def backward(self, upstream, need_input_grad=True, need_param_grads=True,
                 keep_tape=False):
        """Reverse-mode pass; accumulates parameter grads, returns input grad.

        ``keep_tape=True`` leaves the tape alive for a follow-up tangent /
        pair-backward pass over the same forward (used by double backward).
        """
        if self._tape is None:
            raise TapeError("backward called without a recorded forward")
        upstream = np.ascontiguousarray(upstream, dtype=F32)
        if upstream.shape != self._fwd_out_shape:
            raise ShapeMismatchError(
                f"upstream gradient shape {upstream.shape} != forward output "
                f"shape {self._fwd_out_shape}"
            )
        tape = self._tape if keep_tape else self._take_tape()
        g = upstream
        for i in range(len(tape) - 1, -1, -1):
            layer, ctx = tape[i]
            want_input = need_input_grad or i > 0
            g = layer.backward(ctx, g, want_input, need_param_grads)
        return g if need_input_grad else None

    def backward_multi(self, seeds, need_input_grad=True, need_param_grads=True):
        """Backward from gradients seeded at arbitrary layer outputs.

        ``seeds`` maps layer index -> gradient w.r.t. that layer's output.
        """
        tape = self._take_tape()
        g = None
        for i in range(len(tape) - 1, -1, -1):
            layer, ctx = tape[i]
            if i in seeds:
                s = np.ascontiguousarray(seeds[i], dtype=F32)
                if s.shape != ctx["y"].shape:
                    raise ShapeMismatchError(
                        f"seed at layer {i}: shape {s.shape} != output {ctx['y'].shape}"
                    )
                g = s if g is None else g + s
            if g is None:
                continue
            want_input = need_input_grad or i > 0
            g = layer.backward(ctx, g, want_input, need_param_grads)
        return g if need_input_grad else None

    def forward_collect(self, x, indices):
        """Intermediate outputs at the given layer indices; records nothing."""
        wanted = set(indices)
        x = np.ascontiguousarray(x, dtype=F32)
        outs = {}
        h = x
        for i, layer in enumerate(self.layers):
            h = layer.forward(h)
            if i in wanted:
                outs[i] = h
        return [outs[i] for i in indices]

    def tape_outputs(self, indices):
        """Recorded outputs of the given layer indices (requires live tape)."""
        if self._tape is None:
            raise TapeError("no recorded forward")
        return [self._tape[i][1]["y"] for i in indices]

    # -- double backward (forward-over-reverse) ------------------------------

    def tangent_forward(self, t):
        """Push a directional derivative through the recorded forward pass."""
        if self._tape is None:
            raise TapeError("tangent_forward requires a recorded forward")
        t = np.ascontiguousarray(t, dtype=F32)
        if t.shape != self._fwd_in_shape:
            raise ShapeMismatchError(
                f"tangent shape {t.shape} != forward input shape {self._fwd_in_shape}"
            )
        for layer, ctx in self._tape:
            ctx["t_in"] = t
            t = layer.tangent(ctx, t)
        return t

    def pair_backward(self, u_tangent, need_input_grad=False):
        """Reverse through tangent + primal graphs; consumes the tape.

        Accumulates into parameter grad buffers the gradient (w.r.t. the
        parameters) of sum(u_tangent * tangent_output); this is the engine
        behind gradient-of-gradient terms such as the gradient penalty.
        """
        tape = self._take_tape()
        u_t = np.ascontiguousarray(u_tangent, dtype=F32)
        u_a = None
        for i in range(len(tape) - 1, -1, -1):
            layer, ctx = tape[i]
            want_input = need_input_grad or i > 0
            u_t, u_a = layer.pair_backward(ctx, u_t, u_a, want_input)
        return (u_t, u_a) if need_input_grad else (None, None)

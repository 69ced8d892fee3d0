"""Binary checkpoint format for a ModuleGraph.

Layout (all integers little-endian):

    magic "SSNN" | version u16 | layer_count u16 | input_rank u8 | input dims u32*
    per layer: kind u8 | kind config | param_count u8
               per param: rank u8 | dims u32* | float32 data

Round trips are byte-exact: save(load(blob)) == blob.
"""

import struct

import numpy as np

from ..errors import SplitSimError
from .activations import ACT_CODES, ACT_NAMES
from .graph import ModuleGraph
from .layers import Conv2D, ConvTranspose2D, Dense, Flatten, MaxPool2x2, Reshape, ResidualBlock

MAGIC = b"SSNN"
VERSION = 1

_KIND_CODES = {"conv": 1, "convt": 2, "pool": 3, "dense": 4, "flatten": 5, "reshape": 6, "residual": 7}


class CheckpointError(SplitSimError):
    pass


def _pack_layer_config(layer):
    kind = layer.kind
    if kind in ("conv", "convt"):
        return struct.pack(
            "<HBBBB", layer.filters, layer.ksize, layer.stride,
            ACT_CODES[layer.activation], int(layer.use_bias),
        )
    if kind == "dense":
        return struct.pack("<IBB", layer.units, ACT_CODES[layer.activation], int(layer.use_bias))
    if kind == "reshape":
        dims = layer.target_shape
        return struct.pack("<B", len(dims)) + b"".join(struct.pack("<I", d) for d in dims)
    if kind == "residual":
        return struct.pack("<H", layer.filters)
    return b""


def save_graph(graph) -> bytes:
    parts = [MAGIC, struct.pack("<HHB", VERSION, len(graph.layers), len(graph.input_shape))]
    parts.extend(struct.pack("<I", d) for d in graph.input_shape)
    for layer in graph.layers:
        parts.append(struct.pack("<B", _KIND_CODES[layer.kind]))
        parts.append(_pack_layer_config(layer))
        params = layer.params()
        parts.append(struct.pack("<B", len(params)))
        for p in params:
            parts.append(struct.pack("<B", p.ndim))
            parts.extend(struct.pack("<I", d) for d in p.shape)
            parts.append(np.ascontiguousarray(p, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _read_layer(r):
    (code,) = r.unpack("<B")
    if code in (1, 2):
        filters, ksize, stride, act, use_bias = r.unpack("<HBBBB")
        cls = Conv2D if code == 1 else ConvTranspose2D
        return cls(filters, ksize, stride, ACT_NAMES[act], bool(use_bias))
    if code == 3:
        return MaxPool2x2()
    if code == 4:
        units, act, use_bias = r.unpack("<IBB")
        return Dense(units, ACT_NAMES[act], bool(use_bias))
    if code == 5:
        return Flatten()
    if code == 6:
        (rank,) = r.unpack("<B")
        dims = [r.unpack("<I")[0] for _ in range(rank)]
        return Reshape(dims)
    if code == 7:
        (filters,) = r.unpack("<H")
        return ResidualBlock(filters)
    raise CheckpointError(f"unknown layer kind code {code}")


def load_graph(data: bytes) -> ModuleGraph:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointError("bad magic, not an SSNN checkpoint")
    version, n_layers, in_rank = r.unpack("<HHB")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    input_shape = tuple(r.unpack("<I")[0] for _ in range(in_rank))
    layers = []
    blobs = []
    for _ in range(n_layers):
        layer = _read_layer(r)
        (n_params,) = r.unpack("<B")
        tensors = []
        for _ in range(n_params):
            (rank,) = r.unpack("<B")
            shape = tuple(r.unpack("<I")[0] for _ in range(rank))
            count = int(np.prod(shape)) if shape else 1
            buf = r.take(4 * count)
            tensors.append(np.frombuffer(buf, dtype="<f4").reshape(shape).copy())
        layers.append(layer)
        blobs.append(tensors)
    if r.pos != len(data):
        raise CheckpointError("trailing bytes after checkpoint payload")
    graph = ModuleGraph(layers, input_shape, np.random.default_rng(0))
    flat = [t for tensors in blobs for t in tensors]
    graph.load_params(flat)
    return graph


def save_graph_file(graph, path):
    with open(path, "wb") as fh:
        fh.write(save_graph(graph))


def load_graph_file(path) -> ModuleGraph:
    with open(path, "rb") as fh:
        return load_graph(fh.read())


def describe(data: bytes) -> str:
    """Human-readable summary of a checkpoint blob."""
    graph = load_graph(data)
    lines = [f"SSNN v{VERSION}: {len(graph.layers)} layers, input {graph.input_shape}"]
    for i, layer in enumerate(graph.layers):
        n = sum(int(p.size) for p in layer.params())
        extra = ""
        if layer.kind in ("conv", "convt"):
            extra = f" filters={layer.filters} k={layer.ksize} s={layer.stride} act={layer.activation}"
        elif layer.kind == "dense":
            extra = f" units={layer.units} act={layer.activation}"
        elif layer.kind == "residual":
            extra = f" filters={layer.filters}"
        lines.append(f"  [{i}] {layer.kind}{extra} -> {layer.out_shape} params={n}")
    lines.append(f"total params: {graph.num_params()}")
    return "\n".join(lines)

"""Wire format for party-to-party messages.

Frame layout (integers little-endian):

    magic "SPL1" | kind u8 | client_id u16 | round u32 | tensor-count u8
    per tensor: rank u8 | dims u32 each | float32 data
    trailing CRC32 over everything after the 12-byte header

A flipped payload bit fails the CRC; a flipped header bit fails the magic or
kind check. Frames above the size cap are rejected before parsing tensors.
"""

import struct
import zlib
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..errors import FrameError

MAGIC = b"SPL1"
HEADER = struct.Struct("<4sBHIB")
DEFAULT_CAP = 1 << 28


class Kind(IntEnum):
    SMASHED = 0
    GRAD = 1
    LABELS = 2
    SERVER_ACT = 3
    CLIENT_GRAD = 4
    MODEL_HANDOFF = 5
    CONTROL = 6


@dataclass
class Message:
    kind: Kind
    payload: list = field(default_factory=list)
    round: int = 0
    client_id: int = 0

    def __eq__(self, other):
        return (
            isinstance(other, Message)
            and self.kind == other.kind
            and self.round == other.round
            and self.client_id == other.client_id
            and len(self.payload) == len(other.payload)
            and all(
                a.shape == b.shape and np.array_equal(a, b)
                for a, b in zip(self.payload, other.payload)
            )
        )


def encode_frame(msg, size_cap=DEFAULT_CAP):
    # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d, and
    # tobytes() below already emits C order for any layout
    tensors = [np.asarray(t, dtype="<f4") for t in msg.payload]
    for t in tensors:
        if not np.all(np.isfinite(t)):
            raise FrameError("refusing to encode non-finite tensor payload")
    if len(tensors) > 255:
        raise FrameError(f"too many payload tensors ({len(tensors)})")
    body = bytearray()
    for t in tensors:
        if t.ndim > 255:
            raise FrameError("tensor rank exceeds 255")
        body += struct.pack("<B", t.ndim)
        body += b"".join(struct.pack("<I", d) for d in t.shape)
        body += t.tobytes()
    head = HEADER.pack(MAGIC, int(msg.kind), msg.client_id, msg.round, len(tensors))
    frame = head + bytes(body) + struct.pack("<I", zlib.crc32(bytes(body)))
    if len(frame) > size_cap:
        raise FrameError(f"frame size {len(frame)} exceeds cap {size_cap}")
    return frame


def decode_frame(data, size_cap=DEFAULT_CAP):
    if len(data) > size_cap:
        raise FrameError(f"frame size {len(data)} exceeds cap {size_cap}")
    if len(data) < HEADER.size + 4:
        raise FrameError("frame shorter than header + checksum")
    magic, kind, client_id, rnd, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FrameError(f"bad magic {magic!r}")
    try:
        kind = Kind(kind)
    except ValueError:
        raise FrameError(f"unknown message kind {kind}") from None
    body = data[HEADER.size : -4]
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(body) != crc:
        raise FrameError("payload CRC mismatch")
    tensors = []
    pos = 0
    for _ in range(count):
        if pos + 1 > len(body):
            raise FrameError("truncated tensor header")
        rank = body[pos]
        pos += 1
        if pos + 4 * rank > len(body):
            raise FrameError("truncated tensor dims")
        shape = struct.unpack_from(f"<{rank}I", body, pos) if rank else ()
        pos += 4 * rank
        n = 1
        for d in shape:
            n *= d
        if pos + 4 * n > len(body):
            raise FrameError("truncated tensor data")
        arr = np.frombuffer(body, dtype="<f4", count=n, offset=pos).reshape(shape)
        tensors.append(arr.copy())
        pos += 4 * n
    if pos != len(body):
        raise FrameError("trailing bytes after payload tensors")
    return Message(kind=kind, payload=tensors, round=rnd, client_id=client_id)

"""Transports carrying encoded frames between party roles.

Both the in-process channel and the TCP transport push every message through
encode/decode, so training trajectories cannot depend on which one is in use.
"""

import socket
import struct
from collections import deque

from ..errors import FrameError, ProtocolViolation
from .frames import DEFAULT_CAP, HEADER, encode_frame, decode_frame


class InProcEndpoint:
    """One end of a paired in-process channel."""

    def __init__(self):
        self.inbox = deque()
        self.peer = None

    def send(self, msg):
        self.peer.inbox.append(encode_frame(msg))

    def recv(self):
        if not self.inbox:
            raise ProtocolViolation("recv on empty in-process channel")
        return decode_frame(self.inbox.popleft())

    def close(self):
        pass


def inproc_pair():
    a, b = InProcEndpoint(), InProcEndpoint()
    a.peer, b.peer = b, a
    return a, b


class SocketEndpoint:
    """Blocking TCP endpoint with a per-message deadline."""

    def __init__(self, sock, timeout=30.0, size_cap=DEFAULT_CAP):
        self.sock = sock
        self.sock.settimeout(timeout)
        self.size_cap = size_cap

    def send(self, msg):
        self.sock.sendall(encode_frame(msg, self.size_cap))

    def _read_exact(self, n):
        buf = bytearray()
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise FrameError("connection closed mid-frame")
            buf += chunk
        return bytes(buf)

    def recv(self):
        head = self._read_exact(HEADER.size)
        magic, kind, client_id, rnd, count = HEADER.unpack(head)
        body = bytearray()
        for _ in range(count):
            rank_b = self._read_exact(1)
            body += rank_b
            rank = rank_b[0]
            dims = self._read_exact(4 * rank)
            body += dims
            n = 1
            for d in struct.unpack(f"<{rank}I", dims) if rank else ():
                n *= d
            if HEADER.size + len(body) + 4 * n > self.size_cap:
                raise FrameError("incoming frame exceeds size cap")
            body += self._read_exact(4 * n)
        crc = self._read_exact(4)
        return decode_frame(head + bytes(body) + crc, self.size_cap)

    def close(self):
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def listen(port, host="127.0.0.1", timeout=30.0):
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    return srv


def accept(srv, timeout=30.0):
    srv.settimeout(timeout)
    conn, _ = srv.accept()
    return SocketEndpoint(conn, timeout)


def connect(port, host="127.0.0.1", timeout=30.0):
    sock = socket.create_connection((host, port), timeout=timeout)
    return SocketEndpoint(sock, timeout)

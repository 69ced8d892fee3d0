from .frames import Kind, Message, decode_frame, encode_frame
from .session import (
    Client,
    FedAverager,
    HonestServerA,
    HonestServerB,
    drive_round,
    handoff,
    private_label_round,
    round_robin,
    run_client_round,
    splitfed_round,
)
from .transport import InProcEndpoint, SocketEndpoint, accept, connect, inproc_pair, listen

__all__ = [
    "Kind",
    "Message",
    "encode_frame",
    "decode_frame",
    "Client",
    "HonestServerA",
    "HonestServerB",
    "FedAverager",
    "drive_round",
    "private_label_round",
    "run_client_round",
    "round_robin",
    "splitfed_round",
    "handoff",
    "InProcEndpoint",
    "SocketEndpoint",
    "inproc_pair",
    "listen",
    "accept",
    "connect",
]

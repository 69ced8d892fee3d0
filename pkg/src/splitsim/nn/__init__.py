from .adam import Adam
from .arch import (
    build_architecture,
    build_client_tail,
    build_generator,
    build_server_head,
    build_server_trunk,
    build_vision_probe,
    smashed_shape_for,
    VISION_TAPS,
)
from .checkpoint import describe, load_graph, load_graph_file, save_graph, save_graph_file
from .graph import ModuleGraph
from .layers import Conv2D, ConvTranspose2D, Dense, Flatten, MaxPool2x2, Reshape, ResidualBlock
from .losses import accuracy_from_logits, bce_from_logits, mse, softmax_cross_entropy

__all__ = [
    "Adam",
    "ModuleGraph",
    "Conv2D",
    "ConvTranspose2D",
    "Dense",
    "Flatten",
    "MaxPool2x2",
    "Reshape",
    "ResidualBlock",
    "build_architecture",
    "build_client_tail",
    "build_generator",
    "build_server_head",
    "build_server_trunk",
    "build_vision_probe",
    "smashed_shape_for",
    "VISION_TAPS",
    "save_graph",
    "load_graph",
    "save_graph_file",
    "load_graph_file",
    "describe",
    "mse",
    "bce_from_logits",
    "softmax_cross_entropy",
    "accuracy_from_logits",
]

"""Network constructors for every role in the simulator.

The five attack-facing stacks (client encoder f, pilot network, inverse
network, discriminator, attribute classifier) follow fixed layer recipes; the
remaining builders (honest server head, private-label tail, generator, vision
probe) are simulator choices.
"""

import numpy as np

from ..errors import ConfigError
from .graph import ModuleGraph
from .layers import Conv2D, ConvTranspose2D, Dense, Flatten, MaxPool2x2, Reshape, ResidualBlock

ROLES = ("f", "f_tilde", "f_tilde_inv", "D", "C_att")


def build_architecture(role, input_shape, rng, channels_out=None):
    """Build the layer stack for one of the fixed roles.

    ``input_shape`` is per-example (H, W, C) — for "f"/"f_tilde" the image
    shape, for the others the smashed-data shape. ``channels_out`` sets the
    reconstruction channel count for "f_tilde_inv" (defaults to 3) and the
    number of attribute heads for "C_att" (defaults to 1).
    """
    if role == "f":
        layers = [
            Conv2D(64, 5, 1, "relu"),
            MaxPool2x2(),
            Conv2D(128, 5, 1, "relu"),
            MaxPool2x2(),
            Conv2D(256, 5, 1, "relu"),
            MaxPool2x2(),
        ]
    elif role == "f_tilde":
        layers = [
            Conv2D(128, 3, 2, "swish"),
            Conv2D(128, 3, 2, "swish"),
            Conv2D(256, 3, 2, "relu"),
        ]
    elif role == "f_tilde_inv":
        c = 3 if channels_out is None else channels_out
        layers = [
            ConvTranspose2D(256, 3, 2, "relu"),
            ConvTranspose2D(128, 3, 2, "relu"),
            ConvTranspose2D(c, 3, 2, "tanh"),
        ]
    elif role == "D":
        layers = [
            Conv2D(256, 3, 1, "relu"),
            ResidualBlock(256),
            ResidualBlock(256),
            ResidualBlock(256),
            ResidualBlock(256),
            ResidualBlock(256),
            Conv2D(256, 3, 2, "relu"),
            Flatten(),
            Dense(1, "sigmoid"),
        ]
    elif role == "C_att":
        heads = 1 if channels_out is None else channels_out
        layers = [Flatten(), Dense(heads, "sigmoid")]
    else:
        raise ConfigError(f"unknown architecture role {role!r}; expected one of {ROLES}")
    return ModuleGraph(layers, input_shape, rng)


def build_server_head(smashed_shape, n_classes, rng):
    """Honest server network s for the label-sharing variant."""
    layers = [Flatten(), Dense(256, "relu"), Dense(n_classes, "linear")]
    return ModuleGraph(layers, smashed_shape, rng)


def build_server_trunk(smashed_shape, width, rng):
    """Honest server network s for the private-label variant (no logits)."""
    layers = [Flatten(), Dense(width, "relu")]
    return ModuleGraph(layers, smashed_shape, rng)


def build_client_tail(in_width, n_classes, rng):
    """f' — the client-side classification tail in the private-label variant."""
    return ModuleGraph([Dense(n_classes, "linear")], (in_width,), rng)


def build_generator(noise_dim, image_shape, rng):
    """DCGAN-style generator: dense seed, then three 2x upsampling stages."""
    h, w, c = image_shape
    if h % 8 or w % 8:
        raise ConfigError(f"generator needs spatial dims divisible by 8, got {image_shape}")
    s0h, s0w = h // 8, w // 8
    layers = [
        Dense(s0h * s0w * 128, "relu"),
        Reshape((s0h, s0w, 128)),
        ConvTranspose2D(64, 3, 2, "relu"),
        ConvTranspose2D(32, 3, 2, "relu"),
        ConvTranspose2D(c, 3, 2, "tanh"),
    ]
    return ModuleGraph(layers, (noise_dim,), rng)


VISION_TAPS = (0, 1, 2, 3, 4)


def build_vision_probe(input_shape, n_classes, rng):
    """Small 6-conv classifier whose first five conv outputs serve as style taps."""
    layers = [
        Conv2D(16, 3, 1, "relu"),
        Conv2D(16, 3, 2, "relu"),
        Conv2D(32, 3, 1, "relu"),
        Conv2D(32, 3, 2, "relu"),
        Conv2D(64, 3, 1, "relu"),
        Conv2D(64, 3, 2, "relu"),
        Flatten(),
        Dense(n_classes, "linear"),
    ]
    return ModuleGraph(layers, input_shape, rng)


def smashed_shape_for(image_shape):
    """Output shape of the client encoder for a given image shape."""
    h, w, _ = image_shape
    if h % 8 or w % 8:
        raise ConfigError(f"encoder needs spatial dims divisible by 8, got {image_shape}")
    return (h // 8, w // 8, 256)

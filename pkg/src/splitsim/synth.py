"""Procedural image datasets in the standard IDX binary layout.

The sandbox has no dataset downloads, so `splitsim synth-data` draws
MNIST-shaped corpora procedurally: digits are rendered from per-class stroke
templates under random affine jitter, garments from primitive silhouettes.
Files land in the exact IDX format the ingestion path expects (magic 2051 /
2049, big-endian headers, u8 payload), 60000 train + 10000 test examples.
"""

import hashlib
import json
import os
import struct

import numpy as np

F32 = np.float32

# stroke templates per digit, control points in the unit square (x right, y down)
_DIGITS = {
    0: [[(0.50, 0.16), (0.66, 0.24), (0.70, 0.45), (0.68, 0.68), (0.52, 0.84),
         (0.36, 0.76), (0.31, 0.52), (0.34, 0.28), (0.50, 0.16)]],
    1: [[(0.40, 0.28), (0.53, 0.15), (0.53, 0.85)]],
    2: [[(0.32, 0.30), (0.38, 0.18), (0.55, 0.14), (0.67, 0.24), (0.66, 0.40),
         (0.50, 0.58), (0.33, 0.77), (0.32, 0.84), (0.70, 0.84)]],
    3: [[(0.33, 0.22), (0.48, 0.14), (0.64, 0.22), (0.63, 0.38), (0.47, 0.48),
         (0.64, 0.58), (0.66, 0.74), (0.50, 0.85), (0.33, 0.78)]],
    4: [[(0.62, 0.85), (0.62, 0.15), (0.30, 0.62), (0.72, 0.62)]],
    5: [[(0.66, 0.16), (0.36, 0.16), (0.34, 0.46), (0.55, 0.42), (0.67, 0.54),
         (0.66, 0.74), (0.50, 0.85), (0.33, 0.78)]],
    6: [[(0.60, 0.15), (0.44, 0.28), (0.35, 0.52), (0.37, 0.74), (0.52, 0.85),
         (0.65, 0.74), (0.63, 0.57), (0.49, 0.52), (0.38, 0.60)]],
    7: [[(0.30, 0.16), (0.70, 0.16), (0.46, 0.85)]],
    8: [[(0.50, 0.15), (0.63, 0.23), (0.62, 0.40), (0.50, 0.48), (0.37, 0.40),
         (0.38, 0.23), (0.50, 0.15)],
        [(0.50, 0.48), (0.66, 0.58), (0.66, 0.76), (0.50, 0.85), (0.34, 0.76),
         (0.34, 0.58), (0.50, 0.48)]],
    9: [[(0.63, 0.42), (0.48, 0.49), (0.35, 0.40), (0.36, 0.24), (0.50, 0.15),
         (0.64, 0.24), (0.64, 0.42)],
        [(0.64, 0.42), (0.58, 0.85)]],
}

# garment silhouettes: (kind, params) with kind 'rect' (x0,y0,x1,y1) or
# 'ellipse' (cx, cy, rx, ry), all in unit coordinates
_GARMENTS = {
    0: [("rect", (0.33, 0.28, 0.67, 0.82)), ("rect", (0.18, 0.28, 0.82, 0.45))],   # t-shirt
    1: [("rect", (0.32, 0.15, 0.47, 0.85)), ("rect", (0.53, 0.15, 0.68, 0.85)),
        ("rect", (0.32, 0.15, 0.68, 0.34))],                                        # trouser
    2: [("rect", (0.30, 0.25, 0.70, 0.85)), ("rect", (0.16, 0.25, 0.84, 0.55))],   # pullover
    3: [("rect", (0.36, 0.20, 0.64, 0.50)), ("rect", (0.28, 0.50, 0.72, 0.88))],   # dress
    4: [("rect", (0.28, 0.22, 0.72, 0.88)), ("rect", (0.14, 0.22, 0.86, 0.60))],   # coat
    5: [("rect", (0.20, 0.62, 0.80, 0.74)), ("ellipse", (0.35, 0.55, 0.10, 0.08))],# sandal
    6: [("rect", (0.32, 0.24, 0.68, 0.84)), ("rect", (0.20, 0.24, 0.80, 0.40)),
        ("rect", (0.46, 0.24, 0.54, 0.84))],                                        # shirt
    7: [("rect", (0.18, 0.58, 0.82, 0.78)), ("ellipse", (0.68, 0.56, 0.14, 0.10))],# sneaker
    8: [("rect", (0.26, 0.35, 0.74, 0.85)), ("ellipse", (0.50, 0.28, 0.16, 0.10))],# bag
    9: [("rect", (0.36, 0.15, 0.62, 0.80)), ("rect", (0.36, 0.62, 0.80, 0.84))],   # boot
}


def _segments(polylines):
    segs = []
    for line in polylines:
        pts = np.asarray(line, dtype=np.float64)
        segs.extend((pts[i], pts[i + 1]) for i in range(len(pts) - 1))
    return np.asarray(segs)  # (S, 2, 2)


def _jitter_points(segs, rng, n):
    """Random affine per sample applied to all segment endpoints."""
    theta = rng.uniform(-0.25, 0.25, size=n)
    scale = rng.uniform(0.80, 1.08, size=(n, 2))
    shear = rng.uniform(-0.15, 0.15, size=n)
    shift = rng.uniform(-0.07, 0.07, size=(n, 2))
    cos, sin = np.cos(theta), np.sin(theta)
    rot = np.empty((n, 2, 2))
    rot[:, 0, 0] = cos
    rot[:, 0, 1] = -sin
    rot[:, 1, 0] = sin
    rot[:, 1, 1] = cos
    rot[:, 0, 1] += shear
    pts = segs[None] - 0.5                       # (n, S, 2, 2) centered
    pts = pts * scale[:, None, None, :]
    pts = np.einsum("nij,nskj->nski", rot, pts)
    return pts + 0.5 + shift[:, None, None, :]


def _render_strokes(segs_batch, side, radius, rng):
    """Distance-field rendering of per-sample segments. segs: (n, S, 2, 2)."""
    n, s = segs_batch.shape[:2]
    ax = (np.arange(side) + 0.5) / side
    gx, gy = np.meshgrid(ax, ax)                  # gy rows, gx cols
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)  # (P, 2) as (x, y)
    a = segs_batch[:, :, 0][:, :, None, :]        # (n, S, 1, 2)
    b = segs_batch[:, :, 1][:, :, None, :]
    ab = b - a
    denom = np.maximum((ab * ab).sum(-1), 1e-9)
    ap = grid[None, None] - a                     # (n, S, P, 2)
    t = np.clip((ap * ab).sum(-1) / denom, 0.0, 1.0)
    closest = a + t[..., None] * ab
    d = np.sqrt(((grid[None, None] - closest) ** 2).sum(-1))  # (n, S, P)
    dmin = d.min(axis=1)                          # (n, P)
    r = radius[:, None]
    img = np.clip(1.35 * (r - dmin) / r + 0.45, 0.0, 1.0)
    return img.reshape(n, side, side)


def _render_shapes(shapes, side, rng, n):
    """Filled-silhouette rendering with jittered primitive parameters."""
    ax = (np.arange(side) + 0.5) / side
    gx, gy = np.meshgrid(ax, ax)
    img = np.zeros((n, side, side))
    for kind, params in shapes:
        if kind == "rect":
            x0, y0, x1, y1 = params
            jit = rng.uniform(-0.04, 0.04, size=(n, 4))
            for i in range(n):
                m = ((gx >= x0 + jit[i, 0]) & (gx <= x1 + jit[i, 1])
                     & (gy >= y0 + jit[i, 2]) & (gy <= y1 + jit[i, 3]))
                img[i] = np.maximum(img[i], m * 1.0)
        else:
            cx, cy, rx, ry = params
            jit = rng.uniform(-0.03, 0.03, size=(n, 2))
            sc = rng.uniform(0.85, 1.15, size=n)
            for i in range(n):
                m = (((gx - cx - jit[i, 0]) / (rx * sc[i])) ** 2
                     + ((gy - cy - jit[i, 1]) / (ry * sc[i])) ** 2) <= 1.0
                img[i] = np.maximum(img[i], m * 1.0)
    return img


def _blur3(img):
    """Separable [1,2,1]/4 blur, edge-clamped."""
    p = np.pad(img, ((0, 0), (1, 1), (0, 0)), mode="edge")
    img = (p[:, :-2] + 2 * p[:, 1:-1] + p[:, 2:]) * 0.25
    p = np.pad(img, ((0, 0), (0, 0), (1, 1)), mode="edge")
    return (p[:, :, :-2] + 2 * p[:, :, 1:-1] + p[:, :, 2:]) * 0.25


def _finish(img, rng):
    img = _blur3(img)
    img *= rng.uniform(0.82, 1.0, size=(len(img), 1, 1))
    img += rng.normal(0.0, 0.02, size=img.shape)
    return (np.clip(img, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def _generate(kind, count, side, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, size=count).astype(np.uint8)
    images = np.zeros((count, side, side), dtype=np.uint8)
    chunk = 512
    for cls in range(10):
        (where,) = np.nonzero(labels == cls)
        for start in range(0, len(where), chunk):
            sel = where[start : start + chunk]
            n = len(sel)
            if kind == "digits":
                segs = _jitter_points(_segments(_DIGITS[cls]), rng, n)
                radius = rng.uniform(0.045, 0.085, size=n)
                img = _render_strokes(segs, side, radius, rng)
            else:
                img = _render_shapes(_GARMENTS[cls], side, rng, n)
                img *= rng.uniform(0.55, 0.95, size=(n, 1, 1))
                img += rng.normal(0.0, 0.05, size=img.shape)
                img = np.clip(img, 0, 1)
            images[sel] = _finish(img, rng)
    return images, labels


def write_idx_images(path, images):
    n, h, w = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 2051, n, h, w))
        fh.write(images.tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 2049, len(labels)))
        fh.write(labels.astype(np.uint8).tobytes())


IDX_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def synthesize_idx_dataset(dataset, root, seed=None, train_count=60000, test_count=10000):
    """Generate an IDX-layout dataset directory with a checksum manifest."""
    kind = {"mnist": "digits", "fashion_mnist": "shapes"}[dataset]
    if seed is None:
        seed = {"mnist": 1729, "fashion_mnist": 2718}[dataset]
    os.makedirs(root, exist_ok=True)
    tr_x, tr_y = _generate(kind, train_count, 28, seed)
    te_x, te_y = _generate(kind, test_count, 28, seed + 1)
    write_idx_images(os.path.join(root, IDX_NAMES["train_images"]), tr_x)
    write_idx_labels(os.path.join(root, IDX_NAMES["train_labels"]), tr_y)
    write_idx_images(os.path.join(root, IDX_NAMES["test_images"]), te_x)
    write_idx_labels(os.path.join(root, IDX_NAMES["test_labels"]), te_y)
    manifest = {
        "dataset": dataset,
        "cardinalities": {"train": train_count, "test": test_count},
        "files": {},
    }
    for name in IDX_NAMES.values():
        with open(os.path.join(root, name), "rb") as fh:
            manifest["files"][name] = hashlib.sha256(fh.read()).hexdigest()
    with open(os.path.join(root, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return root


def make_image_directory_dataset(root, n_images=64, side=64, channels=3,
                                 attributes=("gender",), seed=9):
    """Tiny CelebA-style fixture: images/ directory + attributes.csv."""
    from PIL import Image

    rng = np.random.default_rng(seed)
    img_dir = os.path.join(root, "images")
    os.makedirs(img_dir, exist_ok=True)
    rows = []
    for i in range(n_images):
        arr = rng.integers(0, 256, size=(side, side, channels), dtype=np.uint8)
        name = f"{i:06d}.png"
        Image.fromarray(arr.squeeze() if channels == 1 else arr).save(
            os.path.join(img_dir, name))
        rows.append([name] + [str(int(rng.integers(0, 2))) for _ in attributes])
    with open(os.path.join(root, "attributes.csv"), "w") as fh:
        fh.write(",".join(["filename", *attributes]) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return root

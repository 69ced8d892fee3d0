"""Dataset ingestion and the private/public split.

The training partition becomes the clients' private pool, the held-out
partition the attacker's public pool; the two are disjoint by construction
and everything is normalized into [-1, 1].
"""

import gzip
import hashlib
import json
import os
import re
import struct
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import IngestionError

F32 = np.float32

IDX_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class DatasetSplit:
    name: str
    x_priv: np.ndarray          # (N, h, w, c) float32 in [-1, 1]
    y_priv: np.ndarray          # (N,) int class labels, never shown to attackers
    x_pub: np.ndarray
    y_pub: np.ndarray | None    # class labels of the public pool, if known
    pixel_range: tuple = (-1.0, 1.0)
    attr_names: tuple = field(default_factory=tuple)


def normalize_pixels(arr):
    """Map pixels into [-1, 1]; already-normalized float input passes through."""
    if arr.dtype == np.uint8:
        return (arr.astype(F32) / 127.5) - 1.0
    arr = arr.astype(F32, copy=False)
    lo, hi = float(arr.min()), float(arr.max())
    if lo >= -1.0 and hi <= 1.0:
        return arr
    if lo >= 0.0 and hi <= 255.0:
        return (arr / 127.5) - 1.0
    raise IngestionError(f"cannot infer pixel range from [{lo}, {hi}]")


def _open_maybe_gz(path):
    if os.path.exists(path):
        return open(path, "rb")
    if os.path.exists(path + ".gz"):
        return gzip.open(path + ".gz", "rb")
    raise IngestionError(f"dataset file missing: {path}")


def read_idx(path):
    """Parse one IDX file (images -> (n,h,w) u8, labels -> (n,) u8)."""
    with _open_maybe_gz(path) as fh:
        head = fh.read(4)
        if len(head) < 4:
            raise IngestionError(f"truncated IDX header in {path}")
        (magic,) = struct.unpack(">I", head)
        if magic == 2051:
            n, h, w = struct.unpack(">III", fh.read(12))
            data = fh.read(n * h * w)
            if len(data) != n * h * w:
                raise IngestionError(f"truncated IDX payload in {path}")
            return np.frombuffer(data, dtype=np.uint8).reshape(n, h, w)
        if magic == 2049:
            (n,) = struct.unpack(">I", fh.read(4))
            data = fh.read(n)
            if len(data) != n:
                raise IngestionError(f"truncated IDX payload in {path}")
            return np.frombuffer(data, dtype=np.uint8)
        raise IngestionError(f"bad IDX magic {magic} in {path}")


def _verify_manifest(root):
    mpath = os.path.join(root, "manifest.json")
    if not os.path.exists(mpath):
        return
    with open(mpath) as fh:
        manifest = json.load(fh)
    for name, digest in manifest.get("files", {}).items():
        path = os.path.join(root, name)
        if not os.path.exists(path):
            raise IngestionError(f"manifest names missing file: {path}")
        with open(path, "rb") as fh:
            actual = hashlib.sha256(fh.read()).hexdigest()
        if actual != digest:
            raise IngestionError(
                f"checksum mismatch for {path}: manifest {digest[:12]}.., file {actual[:12]}..")


def write_manifest(split, path):
    """Record split cardinalities (and per-file hashes already live next to
    the raw data); used by the harness to echo what an experiment consumed."""
    doc = {
        "dataset": split.name,
        "cardinalities": {"priv": int(len(split.x_priv)), "pub": int(len(split.x_pub))},
        "image_shape": list(split.x_priv.shape[1:]),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def _load_idx_split(name, root):
    _verify_manifest(root)
    tr_x = read_idx(os.path.join(root, IDX_FILES["train_images"]))
    tr_y = read_idx(os.path.join(root, IDX_FILES["train_labels"]))
    te_x = read_idx(os.path.join(root, IDX_FILES["test_images"]))
    te_y = read_idx(os.path.join(root, IDX_FILES["test_labels"]))
    if len(tr_x) != len(tr_y) or len(te_x) != len(te_y):
        raise IngestionError(f"image/label count mismatch under {root}")
    return DatasetSplit(
        name=name,
        x_priv=normalize_pixels(tr_x)[..., None],
        y_priv=tr_y.astype(np.int64),
        x_pub=normalize_pixels(te_x)[..., None],
        y_pub=te_y.astype(np.int64),
    )


def _load_image_directory(name, root, side=64):
    """Directory-of-images adapter (CelebA / Omniglot style): images/ plus an
    optional attributes.csv; images are expected pre-resized to ``side``."""
    from PIL import Image

    img_dir = os.path.join(root, "images")
    if not os.path.isdir(img_dir):
        raise IngestionError(f"dataset file missing: {img_dir}")
    names = sorted(os.listdir(img_dir))
    if not names:
        raise IngestionError(f"no images under {img_dir}")
    arrays = []
    for fname in names:
        with Image.open(os.path.join(img_dir, fname)) as im:
            if im.size != (side, side):
                im = im.resize((side, side))
            arr = np.asarray(im, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[..., None]
        arrays.append(arr)
    x = normalize_pixels(np.stack(arrays))
    attr_names = ()
    attrs = None
    csv_path = os.path.join(root, "attributes.csv")
    if os.path.exists(csv_path):
        with open(csv_path) as fh:
            header = fh.readline().strip().split(",")
            attr_names = tuple(header[1:])
            table = {}
            for line in fh:
                cells = line.strip().split(",")
                table[cells[0]] = [max(0, int(v)) for v in cells[1:]]
        attrs = np.array([table.get(n, [0] * len(attr_names)) for n in names], dtype=np.int64)
    # deterministic 80/20 private/public partition over sorted filenames
    n = len(x)
    cut = int(n * 0.8)
    y_all = attrs[:, 0] if attrs is not None else np.zeros(n, dtype=np.int64)
    split = DatasetSplit(
        name=name,
        x_priv=x[:cut],
        y_priv=y_all[:cut],
        x_pub=x[cut:],
        y_pub=y_all[cut:],
        attr_names=attr_names,
    )
    if attrs is not None:
        split.attr_table = {"priv": attrs[:cut], "pub": attrs[cut:]}
    return split


def load_split(dataset_name, root_path):
    """Load a dataset and return its private/public split."""
    root = os.path.join(root_path, dataset_name)
    if dataset_name in ("mnist", "fashion_mnist"):
        return _load_idx_split(dataset_name, root)
    if dataset_name in ("celeba", "omniglot"):
        return _load_image_directory(dataset_name, root)
    raise IngestionError(f"unknown dataset {dataset_name!r}")


def mangle_pub(split, removed_class):
    """Drop every public instance of one class; the private pool is untouched."""
    if split.y_pub is None:
        raise IngestionError("public pool has no class labels to mangle by")
    keep = split.y_pub != removed_class
    if np.all(keep):
        warnings.warn(f"class {removed_class} absent from the public pool; mangle is a no-op")
        return split
    return replace(split, x_pub=split.x_pub[keep], y_pub=split.y_pub[keep])


_PRED = re.compile(r"^label\s*(<|>|==)\s*(\d+)$")


def _eval_attribute(spec, labels, attr_names, attr_rows):
    if spec == "const_true":
        return np.ones(len(labels), dtype=np.int64)
    m = _PRED.match(spec)
    if m:
        op, k = m.group(1), int(m.group(2))
        if op == "<":
            return (labels < k).astype(np.int64)
        if op == ">":
            return (labels > k).astype(np.int64)
        return (labels == k).astype(np.int64)
    if spec in attr_names:
        return attr_rows[:, attr_names.index(spec)]
    raise IngestionError(f"unknown attribute spec {spec!r}")


def attribute_labels(split, spec, pool="pub"):
    """Binary attribute labels for the chosen pool.

    ``spec`` is a derived predicate ("label<5", "label==3", "const_true") or a
    dataset-provided attribute name (e.g. "gender" for CelebA-style data); a
    list of specs yields an (N, k) matrix for the multi-attribute extension.
    """
    labels = split.y_pub if pool == "pub" else split.y_priv
    if labels is None:
        raise IngestionError(f"{pool} pool has no labels")
    rows = getattr(split, "attr_table", {}).get(pool) if hasattr(split, "attr_table") else None
    if isinstance(spec, (list, tuple)):
        cols = [_eval_attribute(s, labels, split.attr_names, rows) for s in spec]
        return np.stack(cols, axis=1)
    return _eval_attribute(spec, labels, split.attr_names, rows)


def batch_stream(arrays, batch_size, seed):
    """Endless iterator of uniformly shuffled batches; ragged tails dropped."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    arrays = [np.asarray(a) for a in arrays]
    n = len(arrays[0])
    if n == 0:
        raise ValueError("cannot stream batches from an empty collection")
    if any(len(a) != n for a in arrays):
        raise ValueError("all arrays must share the leading dimension")
    rng = np.random.default_rng(seed)
    while True:
        perm = rng.permutation(n)
        for i in range(0, n - batch_size + 1, batch_size):
            idx = perm[i : i + batch_size]
            yield tuple(a[idx] for a in arrays)


def batches_per_epoch(n, batch_size):
    return n // batch_size


def to_working_resolution(x, image_size):
    """Map native-resolution images to the experiment's working size.

    28x28 inputs are zero-padded (value -1) to 32x32 so three halvings land on
    a 4x4 grid; the 16x16 option then average-pools once. Larger sources
    average-pool down by powers of two.
    """
    n, h, w, c = x.shape
    if h == 28:
        pad = np.full((n, 32, 32, c), -1.0, dtype=F32)
        pad[:, 2:30, 2:30, :] = x
        x, h = pad, 32
    while h > image_size:
        if h % 2:
            raise ValueError(f"cannot halve odd size {h}")
        x = x.reshape(n, h // 2, 2, h // 2, 2, c).mean(axis=(2, 4)).astype(F32)
        h //= 2
    if h != image_size:
        raise ValueError(f"cannot reach {image_size} from source size {h}")
    return np.ascontiguousarray(x)

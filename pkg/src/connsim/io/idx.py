"""IDX (MNIST-style) image/label files."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .glyphs import LabeledDataset

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class BadMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class CountMismatchError(IdxError):
    pass


def _header(buf: bytes, n_ints: int, magic: int, path) -> tuple:
    if len(buf) < 4 * n_ints:
        raise TruncatedFileError(f"{path}: header truncated ({len(buf)} bytes)")
    vals = struct.unpack_from(f">{n_ints}I", buf, 0)
    if vals[0] != magic:
        raise BadMagicError(f"{path}: magic 0x{vals[0]:08x}, expected 0x{magic:08x}")
    return vals[1:]


def read_idx_images(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    count, rows, cols = _header(buf, 4, IMAGE_MAGIC, path)
    need = 16 + count * rows * cols
    if len(buf) < need:
        raise TruncatedFileError(f"{path}: expected {need} bytes, found {len(buf)}")
    pix = np.frombuffer(buf, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pix.reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    (count,) = _header(buf, 2, LABEL_MAGIC, path)
    if len(buf) < 8 + count:
        raise TruncatedFileError(f"{path}: expected {8 + count} bytes, found {len(buf)}")
    return np.frombuffer(buf, dtype=np.uint8, count=count, offset=8).copy()


def read_idx(images_path, labels_path) -> LabeledDataset:
    """Images scaled to [0, 1] and flattened row-major, with their labels."""
    imgs = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(imgs) != len(labels):
        raise CountMismatchError(f"{len(imgs)} images but {len(labels)} labels")
    n, rows, cols = imgs.shape
    C = int(labels.max()) + 1 if len(labels) else 0
    return LabeledDataset(imgs.reshape(n, rows * cols) / 255.0, labels.astype(np.int64), C, (rows, cols))


def write_idx(images: np.ndarray, labels, images_path, labels_path) -> None:
    """Write uint8 images (N, rows, cols) and labels in IDX layout."""
    imgs = np.asarray(images, dtype=np.uint8)
    n, rows, cols = imgs.shape
    Path(images_path).write_bytes(struct.pack(">4I", IMAGE_MAGIC, n, rows, cols) + imgs.tobytes())
    lab = np.asarray(labels, dtype=np.uint8)
    Path(labels_path).write_bytes(struct.pack(">2I", LABEL_MAGIC, len(lab)) + lab.tobytes())

"""Binary PGM (P5) image dumps."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def to_bytes(image) -> np.ndarray:
    return np.round(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(image, path) -> None:
    """``image`` is a 2-D array of values in [0, 1]; written as P5 with maxval 255."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + to_bytes(img).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1
    pix = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w)
    return pix / float(maxval)


def write_strip(images, shape, path, gap: int = 1) -> None:
    """Images side by side, separated by ``gap`` black columns."""
    imgs = [np.asarray(im, dtype=np.float64).reshape(shape) for im in images]
    if not imgs:
        raise ValueError("no images to write")
    h, w = shape
    strip = np.zeros((h, len(imgs) * (w + gap) - gap))
    for i, im in enumerate(imgs):
        strip[:, i * (w + gap): i * (w + gap) + w] = im
    write_pgm(strip, path)

"""Synthetic 8x8 glyph classes (a desk-scale stand-in for digit images) and class subsampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import RngStream

SIDE = 8
MAX_JITTER = 0.1


@dataclass
class LabeledDataset:
    samples: np.ndarray  # (N, dim), values in [0, 1]
    labels: np.ndarray  # (N,) ints in 0..class_count-1
    class_count: int
    image_shape: tuple = (SIDE, SIDE)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.samples) != len(self.labels):
            raise ValueError("samples and labels differ in length")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("label out of range")

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.samples[idx], self.labels[idx], self.class_count, self.image_shape)


def _canonical() -> list[np.ndarray]:
    g = []
    a = np.zeros((SIDE, SIDE)); a[3:5, :] = 1                     # horizontal bar
    g.append(a)
    a = np.zeros((SIDE, SIDE)); a[:, 3:5] = 1                     # vertical bar
    g.append(a)
    a = np.zeros((SIDE, SIDE)); np.fill_diagonal(a, 1); a[np.arange(SIDE), SIDE - 1 - np.arange(SIDE)] = 1
    g.append(a)                                                     # diagonal cross
    a = np.zeros((SIDE, SIDE)); a[0, :] = a[-1, :] = a[:, 0] = a[:, -1] = 1
    g.append(a)                                                     # box outline
    a = np.zeros((SIDE, SIDE)); a[:4, 0:2] = 1; a[0:2, :4] = 1
    g.append(a)                                                     # top-left corner
    a = np.zeros((SIDE, SIDE)); a[4:, 6:] = 1; a[6:, 4:] = 1
    g.append(a)                                                     # bottom-right corner
    a = np.zeros((SIDE, SIDE)); a[3:5, 1:7] = 1; a[1:7, 3:5] = 1
    g.append(a)                                                     # plus
    a = np.zeros((SIDE, SIDE)); a[2:6, 2:6] = 1
    g.append(a)                                                     # filled centre block
    return [x.ravel() for x in g]


CANONICAL = np.stack(_canonical())
GLYPH_NAMES = ("hbar", "vbar", "xcross", "box", "corner_tl", "corner_br", "plus", "block")


def synth_glyphs(class_count: int, per_class: int, rng: RngStream, jitter: float = 0.05) -> LabeledDataset:
    """``per_class`` jittered copies of the first ``class_count`` canonical glyphs.

    Jitter is uniform in ``[-jitter, jitter]`` per pixel, clipped to [0, 1].
    Canonical glyphs differ in at least 8 pixels (distance >= 2.83) and the
    jitter bound keeps every inter-class distance above 1.0.
    """
    if not 1 <= class_count <= len(CANONICAL):
        raise ValueError(f"class_count must be in 1..{len(CANONICAL)}")
    if not 0.0 <= jitter <= MAX_JITTER:
        raise ValueError(f"jitter must be in [0, {MAX_JITTER}]")
    samples, labels = [], []
    for c in range(class_count):
        for _ in range(per_class):
            x = CANONICAL[c].copy()
            if jitter > 0:
                x = np.clip(x + jitter * (2.0 * rng.uniform(x.size) - 1.0), 0.0, 1.0)
            samples.append(x)
            labels.append(c)
    return LabeledDataset(np.array(samples).reshape(-1, SIDE * SIDE), np.array(labels), class_count)


def restricted_subset(dataset: LabeledDataset, per_class: int, rng: RngStream) -> LabeledDataset:
    """Exactly ``per_class`` randomly chosen samples of every class, in class order."""
    picks = []
    for c in range(dataset.class_count):
        idx = np.nonzero(dataset.labels == c)[0]
        if len(idx) < per_class:
            raise ValueError(f"class {c} has {len(idx)} samples, fewer than {per_class}")
        picks.extend(sorted(idx[rng.permutation(len(idx))[:per_class]].tolist()))
    return dataset.subset(picks)

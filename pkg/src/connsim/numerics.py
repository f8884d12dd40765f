"""Vectors, metrics and reproducible random streams shared by every module.

Points of the image/latent/planar spaces are plain float64 numpy arrays; the
array shape is the shape metadata.  Random streams are counter based
(Philox-4x64) and keyed by ``(master_seed, stream_id)`` so parallel ensemble
members and Monte-Carlo probes each own an independent, reproducible stream.
"""
from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1


class ShapeError(ValueError):
    """Raised when two points that must share a shape do not."""


def as_vector(x, *, image: bool = False) -> np.ndarray:
    """Return ``x`` as a finite float64 array, optionally checking the [0,1] image range."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite components")
    if image and arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("image components must lie in [0, 1]")
    return arr


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def distance(a, b) -> float:
    """Euclidean distance over the flattened components."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_shapes(a, b)
    diff = (a - b).ravel()
    return float(math.sqrt(float(np.dot(diff, diff))))


def normalized_distance(a, b) -> float:
    """L2 distance divided by sqrt(dim); the residual used for every convergence test."""
    a = np.asarray(a, dtype=np.float64)
    return distance(a, b) / math.sqrt(max(a.size, 1))


def row_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise normalized distances between two equally shaped 2-D batches."""
    _check_shapes(A, B)
    d = A - B
    return np.sqrt(np.einsum("ij,ij->i", d, d) / max(A.shape[1], 1))


class RngStream:
    """A counter-based random stream keyed by ``(master_seed, stream_id)``.

    Uniforms come straight from Philox; normals use Box-Muller on those
    uniforms so the normal sequence depends only on the uniform sequence.
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = self.master_seed | (self.stream_id << 64)
        self._bitgen = np.random.Philox(key=key)
        self._gen = np.random.Generator(self._bitgen)
        self.counter = 0  # uniforms consumed so far

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id}, counter={self.counter})"

    def uniform(self, size=None):
        """Uniform draws in [0, 1)."""
        out = self._gen.random(size)
        self.counter += 1 if size is None else int(np.prod(size))
        return out

    def normal(self, size=None):
        """Standard normal draws via Box-Muller (both branches used)."""
        n = 1 if size is None else int(np.prod(size))
        m = (n + 1) // 2
        u = self.uniform(2 * m).reshape(m, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1-u in (0, 1]
        theta = 2.0 * math.pi * u[:, 1]
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        z = z[:n]
        return float(z[0]) if size is None else z.reshape(size)

    def integers(self, low: int, high: int, size=None):
        """Uniform integers in [low, high) built from uniform draws."""
        if high <= low:
            raise ValueError("empty integer range")
        u = self.uniform(size)
        v = np.floor(low + u * (high - low)).astype(np.int64)
        v = np.minimum(v, high - 1)
        return int(v) if size is None else v

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n) (argsort of uniform keys)."""
        return np.argsort(self.uniform(n), kind="stable")


def rng_substream(master_seed: int, stream_id: int) -> RngStream:
    return RngStream(master_seed, stream_id)

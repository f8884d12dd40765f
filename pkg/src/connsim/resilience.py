"""Monte-Carlo estimation of the class separation index of a memorizing autoencoder.

For each probe image the estimator decides, from sampled points of the open
L2 ball of radius T around it:

* ``in_H``: the probe's percept converges to a memorized training example;
* ``in_R``: additionally, every ball sample converges to a training example
  with the same label as the probe's example;
* ``in_Z``: an ``in_H`` probe that is not ``in_R`` (a witness sample landed
  in a label-distinct basin, or left the memorized basins altogether);
* ``in_T_interior``: every ball sample converges to the probe's own example.

The index ``I`` is the fraction of probes in R.  Finite sampling can miss a
basin intersection, so ``in_R`` is an over-estimate; more samples tighten it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autoencoder import AutoencoderModel
from .dynamics import AE_TOL, percept_batch
from .io.glyphs import LabeledDataset
from .numerics import RngStream, rng_substream

UNMATCHED = -1


@dataclass
class CsiConfig:
    T: float
    probes: LabeledDataset
    P: int = 64
    tol_attr: float = 1e-2
    seed: int = 0
    T_grid: Optional[Sequence[float]] = None
    percept_tol: float = AE_TOL
    max_steps: int = 2000
    clamp: bool = True

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if self.T_grid is not None:
            g = [float(t) for t in self.T_grid]
            if any(t <= 0 for t in g) or any(b <= a for a, b in zip(g, g[1:])):
                raise ValueError("T_grid must be positive and strictly increasing")
            self.T_grid = g


@dataclass
class ProbeFlags:
    in_H: bool
    in_R: bool
    in_Z: bool
    in_T_interior: bool
    matched_attractor_index: int
    label_set: list
    unmatched_samples: int = 0
    clamped_samples: int = 0

    def to_dict(self) -> dict:
        return {
            "in_H": self.in_H, "in_R": self.in_R, "in_Z": self.in_Z, "in_T_interior": self.in_T_interior,
            "matched_attractor_index": self.matched_attractor_index, "label_set": list(self.label_set),
            "unmatched_samples": self.unmatched_samples, "clamped_samples": self.clamped_samples,
        }


@dataclass
class CsiReport:
    flags: list
    index_I: float
    t_interior_fraction: float
    h_fraction: float
    z_fraction: float
    T: float
    P: int
    config: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)  # per-T dicts when T_grid is used
    clamp_rate: float = 0.0

    def to_dict(self) -> dict:
        return {
            "index_I": self.index_I, "t_interior_fraction": self.t_interior_fraction,
            "h_fraction": self.h_fraction, "z_fraction": self.z_fraction, "T": self.T, "P": self.P,
            "clamp_rate": self.clamp_rate, "config": self.config,
            "probes": [f.to_dict() for f in self.flags], "sweep": self.sweep,
        }


def unit_ball_offsets(dim: int, P: int, rng: RngStream) -> np.ndarray:
    """``P`` points uniform in the open unit ball: Gaussian direction, radius ``u**(1/dim)``."""
    g = rng.normal((P, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    u = rng.uniform((P, 1))
    return g / norms * u ** (1.0 / dim)


def sample_in_ball(center, T: float, rng: RngStream, clamp: bool = True, n: Optional[int] = None):
    """One (or ``n``) uniform sample(s) of the open ball of radius ``T``; optional clamp to [0,1]."""
    if not T > 0:
        raise ValueError("T must be positive")
    c = np.asarray(center, dtype=np.float64)
    off = unit_ball_offsets(c.size, 1 if n is None else n, rng) * T
    pts = c.ravel() + off
    if clamp:
        pts = np.clip(pts, 0.0, 1.0)
    return pts[0].reshape(c.shape) if n is None else pts


def match_examples(points: np.ndarray, examples: np.ndarray, tol_attr: float) -> np.ndarray:
    """Index of the nearest training example within ``tol_attr`` (normalized L2), else -1."""
    d = np.sqrt(((points[:, None, :] - examples[None, :, :]) ** 2).sum(-1) / examples.shape[1])
    idx = np.argmin(d, axis=1)
    ok = d[np.arange(len(points)), idx] < tol_attr
    return np.where(ok, idx, UNMATCHED)


def _attractor_index(ae, points, train: LabeledDataset, cfg: CsiConfig) -> np.ndarray:
    res = percept_batch(ae.as_map(), points, cfg.percept_tol, cfg.max_steps)
    idx = match_examples(res.points, train.samples, cfg.tol_attr)
    idx[~res.converged] = UNMATCHED
    return idx


def _flags(probe_idx: int, sample_idx: np.ndarray, train: LabeledDataset, clamped: int) -> ProbeFlags:
    if probe_idx == UNMATCHED:
        return ProbeFlags(False, False, False, False, UNMATCHED, [], 0, clamped)
    label = int(train.labels[probe_idx])
    hit = sample_idx[sample_idx != UNMATCHED]
    labels = sorted({int(v) for v in train.labels[hit]} | {label})
    unmatched = int(np.sum(sample_idx == UNMATCHED))
    in_R = unmatched == 0 and bool(np.all(train.labels[hit] == label))
    interior = unmatched == 0 and bool(np.all(hit == probe_idx))
    return ProbeFlags(True, in_R, not in_R, interior, probe_idx, labels, unmatched, clamped)


def probe_membership(ae: AutoencoderModel, train_set: LabeledDataset, x, cfg: CsiConfig,
                     rng: Optional[RngStream] = None) -> ProbeFlags:
    """Flags of a single probe at radius ``cfg.T``."""
    rng = rng or rng_substream(cfg.seed, 0)
    x = np.asarray(x, dtype=np.float64).ravel()
    offsets = unit_ball_offsets(x.size, cfg.P, rng)
    raw = x + cfg.T * offsets
    pts = np.clip(raw, 0.0, 1.0) if cfg.clamp else raw
    clamped = int(np.any(pts != raw, axis=1).sum())
    idx = _attractor_index(ae, np.vstack([x, pts]), train_set, cfg)
    return _flags(int(idx[0]), idx[1:], train_set, clamped)


def _summary(flags: list, T: float) -> dict:
    n = len(flags)
    return {
        "T": T,
        "I": sum(f.in_R for f in flags) / n,
        "t_interior_fraction": sum(f.in_T_interior for f in flags) / n,
        "h_fraction": sum(f.in_H for f in flags) / n,
        "z_fraction": sum(f.in_Z for f in flags) / n,
    }


def class_separation_index(ae: AutoencoderModel, train_set: LabeledDataset, cfg: CsiConfig) -> CsiReport:
    """Index at ``cfg.T``; with ``cfg.T_grid`` also a nested-sample sweep over radii.

    In the sweep each probe owns one set of ``P`` unit-ball directions, scaled
    to every radius of the grid.  Membership at radius ``T`` uses the samples
    of every grid radius ``<= T`` (all of them lie inside ``B_T``), so the
    index cannot increase along the grid.
    """
    probes = cfg.probes
    if len(probes) == 0:
        raise ValueError("probe set is empty")
    radii = sorted(set([cfg.T] + list(cfg.T_grid or [])))
    dim = probes.dim
    per_radius: dict = {T: [] for T in radii}
    clamp_total = 0
    for p_i, x in enumerate(probes.samples):
        rng = rng_substream(cfg.seed, p_i)
        offsets = unit_ball_offsets(dim, cfg.P, rng)
        raws = np.concatenate([x + T * offsets for T in radii])
        pts = np.clip(raws, 0.0, 1.0) if cfg.clamp else raws
        clamped = np.any(pts != raws, axis=1).reshape(len(radii), cfg.P).sum(axis=1)
        idx = _attractor_index(ae, np.vstack([x, pts]), train_set, cfg)
        probe_idx = int(idx[0])
        sample_idx = idx[1:].reshape(len(radii), cfg.P)
        nested_only = cfg.T_grid is not None
        for r, T in enumerate(radii):
            use = sample_idx[: r + 1].ravel() if nested_only else sample_idx[r]
            per_radius[T].append(_flags(probe_idx, use, train_set, int(clamped[: r + 1].sum())))
        clamp_total += int(clamped[radii.index(cfg.T)])
    flags = per_radius[cfg.T]
    s = _summary(flags, cfg.T)
    sweep = [_summary(per_radius[T], T) for T in (cfg.T_grid or [])]
    echo = {"T": cfg.T, "P": cfg.P, "tol_attr": cfg.tol_attr, "seed": cfg.seed,
            "T_grid": list(cfg.T_grid) if cfg.T_grid else None, "probe_count": len(probes),
            "percept_tol": cfg.percept_tol, "max_steps": cfg.max_steps}
    return CsiReport(flags, s["I"], s["t_interior_fraction"], s["h_fraction"], s["z_fraction"], cfg.T, cfg.P,
                     echo, sweep, clamp_total / (len(probes) * cfg.P))


def sweep_csv_rows(report: CsiReport) -> list[dict]:
    return [{"T": r["T"], "I": r["I"], "t_interior_fraction": r["t_interior_fraction"],
             "h_fraction": r["h_fraction"], "z_fraction": r["z_fraction"]} for r in report.sweep]


def pairwise_example_distance(train_set: LabeledDataset) -> float:
    X = train_set.samples
    best = math.inf
    for i in range(len(X)):
        for j in range(i + 1, len(X)):
            if train_set.labels[i] != train_set.labels[j]:
                best = min(best, float(np.linalg.norm(X[i] - X[j])))
    return best

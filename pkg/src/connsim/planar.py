"""Two-person network on the unit square without autoencoders.

Person 1's basins are vertical strips ``[a_{i-1}, a_i) x [0, 1]`` (indexed by
the x coordinate), person 2's are horizontal strips indexed by y.  Each
observed-to-seen step moves a point a fraction ``1 - k`` of the way to the
attractor of its current basin.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .dynamics import PlanarMap, interchange_sequence
from .numerics import RngStream, as_vector

ATTRACTOR_MARGIN = 1e-3


@dataclass(frozen=True)
class PlanarConfig:
    n1: int
    n2: int
    k: float
    cuts_a: tuple
    cuts_b: tuple
    attractors_1: tuple  # n1 (x, y) pairs
    attractors_2: tuple

    def __post_init__(self):
        if not 0.0 < self.k < 1.0:
            raise ValueError("k must satisfy 0 < k < 1")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("attractor counts must be positive")
        for name, cuts, n in (("cuts_a", self.cuts_a, self.n1), ("cuts_b", self.cuts_b, self.n2)):
            if len(cuts) != n - 1:
                raise ValueError(f"{name} must have {n - 1} entries")
            c = [0.0, *cuts, 1.0]
            if any(not c[i] < c[i + 1] for i in range(len(c) - 1)):
                raise ValueError(f"{name} must be strictly increasing inside (0, 1)")
        for person, atts, n in ((1, self.attractors_1, self.n1), (2, self.attractors_2, self.n2)):
            if len(atts) != n:
                raise ValueError(f"person {person} needs {n} attractors")
            for i, p in enumerate(atts):
                if len(p) != 2 or not all(0.0 <= v <= 1.0 for v in p):
                    raise ValueError(f"attractor {i} of person {person} outside the unit square")
                if basin_index(self, person, p) != i:
                    raise ValueError(f"attractor {i} of person {person} is not inside basin {i}")

    def cuts(self, person: int) -> np.ndarray:
        return np.array(self.cuts_a if person == 1 else self.cuts_b, dtype=np.float64)

    def attractors(self, person: int) -> np.ndarray:
        return np.array(self.attractors_1 if person == 1 else self.attractors_2, dtype=np.float64).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {
            "n1": self.n1, "n2": self.n2, "k": self.k,
            "cuts_a": list(self.cuts_a), "cuts_b": list(self.cuts_b),
            "attractors_1": [list(p) for p in self.attractors_1],
            "attractors_2": [list(p) for p in self.attractors_2],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarConfig":
        return cls(
            n1=int(d["n1"]), n2=int(d["n2"]), k=float(d["k"]),
            cuts_a=tuple(float(v) for v in d["cuts_a"]),
            cuts_b=tuple(float(v) for v in d["cuts_b"]),
            attractors_1=tuple((float(p[0]), float(p[1])) for p in d["attractors_1"]),
            attractors_2=tuple((float(p[0]), float(p[1])) for p in d["attractors_2"]),
        )

    def maps(self) -> tuple[PlanarMap, PlanarMap]:
        return PlanarMap(self, 1), PlanarMap(self, 2)


def _sample_cuts(n: int, rng: RngStream) -> list[float]:
    # resample until every strip is wide enough to hold an attractor with margin
    while True:
        cuts = sorted(float(v) for v in rng.uniform(n - 1)) if n > 1 else []
        edges = [0.0, *cuts, 1.0]
        if all(edges[i + 1] - edges[i] > 4 * ATTRACTOR_MARGIN for i in range(n)):
            return cuts


def _sample_in(lo: float, hi: float, rng: RngStream) -> float:
    lo, hi = lo + ATTRACTOR_MARGIN, hi - ATTRACTOR_MARGIN
    return lo + float(rng.uniform()) * (hi - lo)


def random_planar_config(n1: int, n2: int, k: float, rng: RngStream) -> PlanarConfig:
    cuts_a = _sample_cuts(n1, rng)
    cuts_b = _sample_cuts(n2, rng)
    ea, eb = [0.0, *cuts_a, 1.0], [0.0, *cuts_b, 1.0]
    att1 = tuple((_sample_in(ea[i], ea[i + 1], rng), _sample_in(0.0, 1.0, rng)) for i in range(n1))
    att2 = tuple((_sample_in(0.0, 1.0, rng), _sample_in(eb[j], eb[j + 1], rng)) for j in range(n2))
    return PlanarConfig(n1, n2, float(k), tuple(cuts_a), tuple(cuts_b), att1, att2)


def basin_index(config: PlanarConfig, person: int, point) -> int:
    """Index of the strip holding the point; strips are half-open, the last one closed."""
    x, y = float(point[0]), float(point[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"point ({x}, {y}) outside the unit square")
    if person == 1:
        return bisect_right(config.cuts_a, x)
    if person == 2:
        return bisect_right(config.cuts_b, y)
    raise ValueError("person must be 1 or 2")


def planar_step(config: PlanarConfig, person: int, point) -> np.ndarray:
    p = as_vector(point)
    j = basin_index(config, person, p)
    ax, ay = (config.attractors_1 if person == 1 else config.attractors_2)[j]
    c = 1.0 - config.k
    return np.array([c * ax + config.k * p[0], c * ay + config.k * p[1]])


def run_algorithm2(config: PlanarConfig, I0, nsteps1: int, nsteps2: int, n_iters: int) -> np.ndarray:
    """Interchange points ``I_1 = I0, I_2, ...`` of the planar two-person network."""
    I0 = as_vector(I0)
    basin_index(config, 1, I0)
    m1, m2 = config.maps()
    return interchange_sequence(m1, m2, I0, nsteps1, nsteps2, n_iters)


def attractor_hop_cycle(config: PlanarConfig, I0) -> tuple[list, list]:
    """Walk the finite attractor graph; returns (prefix, cycle) of ``(person, index)`` nodes.

    Node ``(1, i)`` hops to person 2's attractor whose basin holds attractor
    ``i`` of person 1, and vice versa.  The walk starts at the person-1
    attractor of the basin holding ``I0``; the cycle is rotated to begin
    with a person-1 node.
    """
    node = (1, basin_index(config, 1, I0))
    seen: dict = {}
    walk = []
    while node not in seen:
        seen[node] = len(walk)
        walk.append(node)
        person, i = node
        src = config.attractors_1[i] if person == 1 else config.attractors_2[i]
        other = 2 if person == 1 else 1
        node = (other, basin_index(config, other, src))
    start = seen[node]
    cycle = walk[start:]
    if cycle[0][0] == 2:
        cycle = cycle[1:] + cycle[:1]
    return walk[:start], cycle


def nearest_attractor(config: PlanarConfig, person: int, point) -> tuple[int, float]:
    """Index of the owning person's closest attractor and its normalized distance."""
    att = config.attractors(person)
    d = np.sqrt(((att - np.asarray(point)) ** 2).sum(axis=1) / 2.0)
    i = int(np.argmin(d))
    return i, float(d[i])

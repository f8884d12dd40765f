"""Iterating point maps: percepts, cycles, interchange sequences and bipartite orbits.

All residuals are L2 distances normalized by sqrt(dim) (see
:func:`connsim.numerics.normalized_distance`), so tolerances do not depend on
the dimension of the space.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from . import kernels
from .numerics import ShapeError, as_vector, normalized_distance, row_distances

if TYPE_CHECKING:
    from .autoencoder import AutoencoderModel
    from .planar import PlanarConfig

PLANAR_TOL = 1e-9
AE_TOL = 1e-6
DEFAULT_MAX_STEPS = 10_000
DEFAULT_MAX_PERIOD = 64


# --------------------------------------------------------------------------
# person maps


class PersonMap:
    """An observed-to-seen transformation ``X -> X``."""

    kind = "abstract"
    shape: tuple

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_batch(self, X: np.ndarray) -> np.ndarray:
        return np.stack([self.apply(x) for x in X])

    def iterate(self, x: np.ndarray, n: int) -> np.ndarray:
        for _ in range(n):
            x = self.apply(x)
        return x

    def trace(self, x: np.ndarray, n: int) -> np.ndarray:
        pts = np.empty((n + 1,) + x.shape)
        pts[0] = x
        for i in range(n):
            x = self.apply(x)
            pts[i + 1] = x
        return pts

    def check(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.shape != self.shape:
            raise ShapeError(f"{self.kind} map expects shape {self.shape}, got {x.shape}")
        return x

    def describe(self) -> dict:
        return {"kind": self.kind, "shape": list(self.shape)}


class ConstantMap(PersonMap):
    """Ignores its input and always returns the same point (an observed object)."""

    kind = "constant"

    def __init__(self, point):
        self.point = as_vector(point).copy()
        self.point.setflags(write=False)
        self.shape = self.point.shape

    def apply(self, x):
        return self.point.copy()

    def apply_batch(self, X):
        return np.broadcast_to(self.point, np.shape(X)).copy()

    def iterate(self, x, n):
        return x if n == 0 else self.point.copy()

    def describe(self):
        return {"kind": self.kind, "shape": list(self.shape), "point": self.point.tolist()}


class PlanarMap(PersonMap):
    """Contraction toward the attractor of the current row/column basin."""

    kind = "planar"

    def __init__(self, config: "PlanarConfig", person: int):
        if person not in (1, 2):
            raise ValueError("person must be 1 or 2")
        self.config = config
        self.person = person
        self.shape = (2,)
        self._cuts = config.cuts(person)
        self._att = config.attractors(person)

    def apply(self, x):
        from .planar import planar_step

        return planar_step(self.config, self.person, x)

    def trace(self, x, n):
        x = self.check(x)
        return kernels.planar_trace(self._cuts, self._att, self.person - 1, self.config.k, x[0], x[1], n)

    def iterate(self, x, n):
        return self.trace(x, n)[-1].copy()

    def describe(self):
        return {"kind": self.kind, "shape": [2], "person": self.person}


class AutoencoderMap(PersonMap):
    """``dec(enc(x))`` of a trained autoencoder."""

    kind = "autoencoder"

    def __init__(self, model: "AutoencoderModel"):
        self.model = model
        self.shape = (model.input_dim,)

    def apply(self, x):
        return self.model.reconstruct(x)

    def apply_batch(self, X):
        return self.model.reconstruct(X)

    def describe(self):
        return {"kind": self.kind, "shape": list(self.shape), "latent_dim": self.model.latent_dim}


def apply_map(pmap: PersonMap, x) -> np.ndarray:
    """One observed-to-seen step."""
    return pmap.apply(pmap.check(x))


# --------------------------------------------------------------------------
# traces and percepts


@dataclass
class IterationTrace:
    points: np.ndarray
    residuals: np.ndarray

    def __len__(self):
        return len(self.points)


def _trace_residuals(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.zeros(0)
    flat = points.reshape(len(points), -1)
    return row_distances(flat[1:], flat[:-1])


def iterate_map(pmap: PersonMap, x0, n: int) -> IterationTrace:
    if n < 0:
        raise ValueError("n must be non-negative")
    pts = pmap.trace(pmap.check(x0), n)
    return IterationTrace(pts, _trace_residuals(pts))


@dataclass
class FixedPointResult:
    point: np.ndarray
    steps: int
    residual: float
    converged: bool


def percept(pmap: PersonMap, x0, tol: float, max_steps: int = DEFAULT_MAX_STEPS) -> FixedPointResult:
    """Iterate until consecutive points are closer than ``tol`` or ``max_steps`` runs out."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = pmap.check(x0)
    residual = float("inf")
    for step in range(1, max_steps + 1):
        y = pmap.apply(x)
        residual = normalized_distance(y, x)
        x = y
        if residual < tol:
            return FixedPointResult(x, step, residual, True)
    return FixedPointResult(x, max_steps, residual, False)


@dataclass
class BatchPercept:
    points: np.ndarray
    steps: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray


def percept_batch(pmap: PersonMap, X, tol: float, max_steps: int = DEFAULT_MAX_STEPS) -> BatchPercept:
    """Row-wise :func:`percept` over a batch; rows stop updating once converged."""
    X = np.array(X, dtype=np.float64, ndmin=2)
    n = len(X)
    steps = np.zeros(n, dtype=np.int64)
    res = np.full(n, np.inf)
    conv = np.zeros(n, dtype=bool)
    active = np.arange(n)
    for step in range(1, max_steps + 1):
        if active.size == 0:
            break
        cur = X[active]
        nxt = pmap.apply_batch(cur)
        r = row_distances(nxt, cur)
        X[active] = nxt
        res[active] = r
        steps[active] = step
        done = r < tol
        conv[active[done]] = True
        active = active[~done]
    return BatchPercept(X, steps, res, conv)


# --------------------------------------------------------------------------
# cycles


@dataclass
class CycleResult:
    period: int
    elements: np.ndarray
    residual: float


def detect_cycle(trace, tol: float, burn_in: Optional[int] = None,
                 max_period: int = DEFAULT_MAX_PERIOD) -> Optional[CycleResult]:
    """Smallest period ``p <= max_period`` holding over the final window of ``max_period`` points.

    ``trace`` is an :class:`IterationTrace` or an array of points.  The
    returned elements are the last ``p`` points of the trace.
    """
    pts = trace.points if isinstance(trace, IterationTrace) else np.asarray(trace, dtype=np.float64)
    L = len(pts)
    if burn_in is None:
        burn_in = L // 2
    if L < burn_in + 2 * max_period:
        raise ValueError(f"trace of length {L} too short for burn_in={burn_in}, max_period={max_period}")
    flat = pts.reshape(L, -1)
    tail = flat[L - max_period:]
    for p in range(1, max_period + 1):
        r = row_distances(tail, flat[L - max_period - p: L - p])
        if np.all(r < tol):
            return CycleResult(p, pts[L - p:].copy(), float(r.max()))
    return None


# --------------------------------------------------------------------------
# interchange sequences


def _check_pair(map1: PersonMap, map2: PersonMap, nsteps1: int, nsteps2: int, n_iters: int):
    if map1.shape != map2.shape:
        raise ShapeError(f"person maps disagree on shape: {map1.shape} vs {map2.shape}")
    if nsteps1 < 1 or nsteps2 < 1:
        raise ValueError("nsteps must be >= 1")
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")


def _same_planar(map1, map2) -> bool:
    return (isinstance(map1, PlanarMap) and isinstance(map2, PlanarMap)
            and map1.config is map2.config and (map1.person, map2.person) == (1, 2))


def interchange_sequence(map1: PersonMap, map2: PersonMap, x0, nsteps1: int, nsteps2: int,
                         n_iters: int) -> np.ndarray:
    """Transmitted images ``U``: ``U[0] = x0``, ``U[i] = F_{od(i)}^{nsteps}(U[i-1])``.

    Person 1 acts on odd exchanges (the first, third, ...), person 2 on even ones.
    """
    _check_pair(map1, map2, nsteps1, nsteps2, n_iters)
    x = map1.check(x0)
    if _same_planar(map1, map2):
        c = map1.config
        return kernels.planar_interchange(c.cuts(1), c.cuts(2), c.attractors(1), c.attractors(2),
                                          c.k, x[0], x[1], nsteps1, nsteps2, n_iters)
    U = np.empty((n_iters + 1,) + x.shape)
    U[0] = x
    for it in range(n_iters):
        if it % 2 == 0:
            x = map1.iterate(x, nsteps1)
        else:
            x = map2.iterate(x, nsteps2)
        U[it + 1] = x
    return U


def w_segment_ends(nsteps1: int, nsteps2: int, n_iters: int) -> np.ndarray:
    """Indices into ``W`` of ``U[0], U[1], ...`` (segment start, then each segment end)."""
    lens = [(nsteps1 if it % 2 == 0 else nsteps2) + 1 for it in range(n_iters)]
    return np.concatenate([[0], np.cumsum(lens) - 1])


def generate_W(map1: PersonMap, map2: PersonMap, x0, nsteps1: int, nsteps2: int, n_iters: int) -> np.ndarray:
    """Every intermediate image: concatenation of the per-exchange internal sequences.

    Each segment starts with the image received and ends with the image
    sent, so consecutive segments share their boundary image.
    """
    _check_pair(map1, map2, nsteps1, nsteps2, n_iters)
    x = map1.check(x0)
    segments = []
    for it in range(n_iters):
        seg = (map1.trace(x, nsteps1) if it % 2 == 0 else map2.trace(x, nsteps2))
        segments.append(seg)
        x = seg[-1].copy()
    return np.concatenate(segments)


def partition_columns(U, K: int, m: int) -> np.ndarray:
    """Rows of ``K`` consecutive transmitted images after the seed: ``out[r, c] = U[1 + r*K + c]``."""
    U = np.asarray(U)
    need = 1 + (m + 1) * K
    if K < 1 or m < 0:
        raise ValueError("K must be >= 1 and m >= 0")
    if len(U) < need:
        raise ValueError(f"sequence of length {len(U)} shorter than 1+(m+1)*K = {need}")
    return U[1:need].reshape((m + 1, K) + U.shape[1:])


# --------------------------------------------------------------------------
# bipartite orbits


@dataclass
class OrbitReport:
    kind: str  # "first_type" | "second_type" | "none"
    period_K: int
    elements: np.ndarray
    loop_residual: float = float("nan")
    g_fixed_residuals: list = field(default_factory=list)
    detected_at_iter: int = -1
    distinct: bool = True
    anomaly: Optional[str] = None
    observed_period: int = 0
    awareness_residuals: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.kind != "none"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "period_K": int(self.period_K),
            "elements": np.asarray(self.elements).tolist(),
            "loop_residual": float(self.loop_residual),
            "g_fixed_residuals": [float(v) for v in self.g_fixed_residuals],
            "detected_at_iter": int(self.detected_at_iter),
            "distinct": bool(self.distinct),
            "anomaly": self.anomaly,
            "observed_period": int(self.observed_period),
            "awareness_residuals": [float(v) for v in self.awareness_residuals],
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrbitReport":
        d = dict(d)
        d["elements"] = np.asarray(d["elements"], dtype=np.float64)
        return cls(**d)


def _none_report(**kw) -> OrbitReport:
    kw.setdefault("period_K", 0)
    kw.setdefault("elements", np.zeros((0,)))
    return OrbitReport(kind="none", **kw)


def _pairwise_distinct(elements: np.ndarray, tol: float) -> bool:
    flat = elements.reshape(len(elements), -1)
    for i in range(len(flat)):
        for j in range(i + 1, len(flat)):
            if normalized_distance(flat[i], flat[j]) <= tol:
                return False
    return True


def detect_first_type_orbit(U, tol: float, max_period: int = DEFAULT_MAX_PERIOD,
                            burn_in: Optional[int] = None) -> OrbitReport:
    """Find the settled even-length cycle of a transmitted-image sequence.

    The seed ``U[0]`` is excluded.  The minimal period ``p`` of the tail is
    found first; an even ``p`` becomes ``K``.  An odd ``p`` is never doubled
    silently: the report has kind ``none``, the anomaly set and ``2p`` as the
    candidate ``K``.
    """
    U = np.asarray(U, dtype=np.float64)
    if len(U) < 4 * max_period:
        raise ValueError(f"sequence of length {len(U)} shorter than 4*max_period")
    seq = U[1:]
    n = len(seq)
    if burn_in is None:
        burn_in = min(n // 2, n - 2 * max_period)
    cyc = detect_cycle(seq, tol, burn_in=burn_in, max_period=max_period)
    if cyc is None:
        return _none_report(diagnostics={"reason": "no settled period", "max_period": max_period})
    p = cyc.period
    K = p if p % 2 == 0 else 2 * p
    flat = seq.reshape(n, -1)
    settle = row_distances(flat[K:], flat[:-K])
    bad = np.nonzero(settle >= tol)[0]
    first_ok = int(bad[-1] + 1) if bad.size else 0
    rows = n // K
    r = rows - 1
    elements = seq[r * K: r * K + K].copy()
    loop_res = float(settle[max(first_ok, n - K - max_period):].max())
    distinct = _pairwise_distinct(elements, tol)
    common = dict(period_K=K, elements=elements, loop_residual=loop_res, detected_at_iter=first_ok + 1,
                  distinct=distinct, observed_period=p)
    if p % 2 == 1:
        anomaly = "fixed_point" if p == 1 else "odd_period"
        return _none_report(anomaly=anomaly, **common)
    if not distinct:
        return _none_report(anomaly="coincident_elements", **common)
    return OrbitReport(kind="first_type", **common)


def _compose_F(map1, map2, nsteps1, nsteps2):
    def F1(x):
        return map1.iterate(x, nsteps1)

    def F2(x):
        return map2.iterate(x, nsteps2)

    return F1, F2


def verify_orbit_loop(orbit: OrbitReport, map1: PersonMap, map2: PersonMap, nsteps1: int,
                      nsteps2: int) -> dict:
    """Loop closure ``b_h -> b_{h+1}`` and fixed-point residuals of the K/2-fold compositions.

    Even ``h`` elements were sent by person 1, so the next step is person 2's
    ``F_2``; the element is a fixed point of ``(F_1 o F_2)^{K/2}``.  Odd ``h``
    uses the mirrored composition.
    """
    if orbit.period_K < 1 or len(orbit.elements) == 0:
        raise ValueError("orbit has no elements")
    F1, F2 = _compose_F(map1, map2, nsteps1, nsteps2)
    K = orbit.period_K
    b = np.asarray(orbit.elements, dtype=np.float64)
    loop = 0.0
    g_res = []
    for h in range(K):
        nxt = F2(b[h]) if h % 2 == 0 else F1(b[h])
        loop = max(loop, normalized_distance(nxt, b[(h + 1) % K]))
        x = b[h]
        for _ in range(K // 2):
            x = F1(F2(x)) if h % 2 == 0 else F2(F1(x))
        g_res.append(normalized_distance(x, b[h]))
    return {"loop_residual": loop, "g_residuals": g_res}


def align_cyclic(a: np.ndarray, b: np.ndarray, step: int = 2) -> tuple[int, float]:
    """Rotation ``r`` (a multiple of ``step``) minimizing ``max_h d(a[h], b[(h+r) % K])``."""
    K = len(a)
    best = (0, float("inf"))
    for r in range(0, K, step):
        d = max(normalized_distance(a[h], b[(h + r) % K]) for h in range(K))
        if d < best[1]:
            best = (r, d)
    return best


def awareness_residuals(elements: np.ndarray, map1: PersonMap, map2: PersonMap) -> list:
    """Single-step residual of each element under its owning person's map."""
    out = []
    for h, b in enumerate(elements):
        owner = map1 if h % 2 == 0 else map2
        out.append(normalized_distance(owner.apply(b), b))
    return out


def detect_second_type_orbit(map1: PersonMap, map2: PersonMap, x0, nsteps_schedule: Sequence,
                             tol: float, orbit_match_tol: float, n_iters: int = 200,
                             max_period: int = DEFAULT_MAX_PERIOD) -> OrbitReport:
    """First-type orbits along an increasing nsteps schedule; stable tail means second type.

    Schedule entries are ints (same nsteps for both persons) or pairs.
    """
    sched = [tuple(s) if isinstance(s, (tuple, list)) else (int(s), int(s)) for s in nsteps_schedule]
    if len(sched) < 2:
        raise ValueError("nsteps_schedule needs at least two entries")
    max_period = max(1, min(max_period, (n_iters + 1) // 4))
    orbits = []
    for n1, n2 in sched:
        U = interchange_sequence(map1, map2, x0, n1, n2, n_iters)
        orb = detect_first_type_orbit(U, tol, max_period=max_period)
        if orb.found:
            chk = verify_orbit_loop(orb, map1, map2, n1, n2)
            orb.loop_residual = chk["loop_residual"]
            orb.g_fixed_residuals = chk["g_residuals"]
        orbits.append(orb)
    diag = {
        "schedule": [list(s) for s in sched],
        "periods": [o.period_K if o.found else 0 for o in orbits],
        "kinds": [o.kind for o in orbits],
    }
    last, prev = orbits[-1], orbits[-2]
    if not (last.found and prev.found):
        diag["reason"] = "no first-type orbit at some schedule entry"
        return _none_report(diagnostics=diag)
    if last.period_K != prev.period_K:
        diag["reason"] = "period changed across schedule"
        return _none_report(diagnostics=diag)
    rot, match = align_cyclic(prev.elements, last.elements)
    diag["rotation"] = rot
    diag["match_residual"] = match
    aware = awareness_residuals(last.elements, map1, map2)
    if match >= orbit_match_tol:
        diag["reason"] = "orbits did not match within orbit_match_tol"
        return _none_report(period_K=last.period_K, elements=last.elements,
                            awareness_residuals=aware, diagnostics=diag)
    return dataclasses.replace(last, kind="second_type", awareness_residuals=aware, diagnostics=diag)

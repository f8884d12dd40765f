import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connsim.dynamics import (
    ConstantMap,
    IterationTrace,
    OrbitReport,
    PersonMap,
    apply_map,
    detect_cycle,
    detect_first_type_orbit,
    detect_second_type_orbit,
    generate_W,
    interchange_sequence,
    iterate_map,
    partition_columns,
    percept,
    percept_batch,
    verify_orbit_loop,
    w_segment_ends,
)
from connsim.numerics import ShapeError, normalized_distance, rng_substream
from connsim.planar import PlanarConfig, random_planar_config


def single_basin(k=0.5, a1=(0.8, 0.8), a2=(0.2, 0.3)):
    return PlanarConfig(1, 1, k, (), (), (a1,), (a2,))


class ShiftMod(PersonMap):
    """x -> (x + 1) mod M on a one-point "space"; the period of U depends on nsteps."""

    kind = "shift"

    def __init__(self, M):
        self.M = M
        self.shape = (1,)

    def apply(self, x):
        return np.array([(x[0] + 1.0) % self.M])


class Wrapped(PersonMap):
    """Hides a planar map behind the generic per-step path."""

    kind = "wrapped"

    def __init__(self, inner):
        self.inner = inner
        self.shape = inner.shape

    def apply(self, x):
        return self.inner.apply(x)


def naive_step(cfg, person, p):
    cuts = cfg.cuts(person)
    coord = p[0] if person == 1 else p[1]
    j = sum(1 for c in cuts if coord >= c)
    att = cfg.attractors(person)[j]
    return (1 - cfg.k) * att + cfg.k * p


# ---------------------------------------------------------------- maps


def test_constant_map_ignores_input():
    m = ConstantMap([0.1, 0.2])
    assert np.array_equal(apply_map(m, [0.9, 0.9]), [0.1, 0.2])
    with pytest.raises(ShapeError):
        apply_map(m, [0.1, 0.2, 0.3])


def test_planar_midpoint():
    m1, _ = single_basin().maps()
    assert np.allclose(apply_map(m1, [0.2, 0.2]), [0.5, 0.5], atol=1e-15)


def test_iterate_map_closed_form():
    cfg = single_basin(k=0.7)
    m1, _ = cfg.maps()
    x0 = np.array([0.1, 0.95])
    tr = iterate_map(m1, x0, 40)
    att = np.array([0.8, 0.8])
    for n, p in enumerate(tr.points):
        ref = (1 - 0.7 ** n) * att + 0.7 ** n * x0
        assert np.allclose(p, ref, atol=1e-12, rtol=0)
    assert len(tr.residuals) == len(tr.points) - 1
    assert np.all(tr.residuals >= 0)


def test_iterate_map_zero_and_constant():
    assert len(iterate_map(ConstantMap([0.3]), [0.1], 0)) == 1
    tr = iterate_map(ConstantMap([0.3]), [0.1], 5)
    assert np.all(tr.residuals[1:] == 0)
    with pytest.raises(ValueError):
        iterate_map(ConstantMap([0.3]), [0.1], -1)


# ---------------------------------------------------------------- percept


def test_percept_on_fixed_point():
    m1, _ = single_basin().maps()
    r = percept(m1, [0.8, 0.8], 1e-9)
    assert r.converged and r.steps <= 1 and r.residual < 1e-9


def test_percept_geometric_bound():
    for seed in range(20):
        cfg = random_planar_config(3, 3, 0.5, rng_substream(seed, 0))
        m1, _ = cfg.maps()
        x0 = rng_substream(seed, 1).uniform(2)
        tol = 1e-9
        r = percept(m1, x0, tol)
        bound = math.ceil(math.log(tol / math.sqrt(2)) / math.log(cfg.k)) + 1
        assert r.converged and r.steps <= bound
        assert normalized_distance(apply_map(m1, r.point), r.point) < tol


def test_percept_max_steps_exhausted():
    r = percept(ShiftMod(4), [0.0], 1e-6, max_steps=50)
    assert not r.converged and r.steps == 50
    r0 = percept(ShiftMod(4), [0.0], 1e-6, max_steps=0)
    assert not r0.converged and r0.residual == math.inf
    with pytest.raises(ValueError):
        percept(ShiftMod(4), [0.0], 0.0)


def test_percept_batch_matches_single():
    cfg = random_planar_config(4, 2, 0.6, rng_substream(3, 0))
    m1, _ = cfg.maps()
    X = rng_substream(3, 1).uniform((10, 2))
    b = percept_batch(m1, X, 1e-9)
    for i, x in enumerate(X):
        s = percept(m1, x, 1e-9)
        assert s.steps == b.steps[i] and s.converged == b.converged[i]
        assert np.allclose(s.point, b.points[i], atol=1e-14)


# ---------------------------------------------------------------- cycles


def test_detect_cycle_constant_and_alternating():
    tr = np.vstack([np.linspace(0, 1, 20)[:, None], np.full((300, 1), 0.4)])
    assert detect_cycle(tr, 1e-9, max_period=16).period == 1
    u, v = [0.1, 0.2], [0.7, 0.3]
    alt = np.array([[0.5, 0.5]] * 10 + [u, v] * 60)
    c = detect_cycle(alt, 1e-9, max_period=16)
    assert c.period == 2
    assert {tuple(e) for e in c.elements} == {tuple(u), tuple(v)}


def test_detect_cycle_prefers_true_period_over_near_match():
    tol = 1e-6
    base = np.array([0.0, 0.1, 0.2, 0.0 + 2 * tol, 0.1 + 2 * tol, 0.2 + 2 * tol])
    tr = np.tile(base, 60)[:, None]
    c = detect_cycle(tr, tol, max_period=12)
    assert c.period == 6


def test_detect_cycle_rejects_short_trace_and_reports_none():
    with pytest.raises(ValueError):
        detect_cycle(np.zeros((10, 1)), 1e-9, burn_in=0, max_period=8)
    assert detect_cycle(np.arange(200.0)[:, None], 1e-9, max_period=16) is None
    tr = IterationTrace(np.zeros((64, 1)), np.zeros(63))
    assert detect_cycle(tr, 1e-9, max_period=8).period == 1


# ---------------------------------------------------------------- sequences


def test_interchange_constant_maps():
    c = ConstantMap([0.4, 0.6])
    U = interchange_sequence(c, c, [0.0, 0.0], 3, 2, 10)
    assert np.all(U[1:] == [0.4, 0.6])


def test_interchange_single_basin_alternates():
    cfg = single_basin(k=0.5)
    m1, m2 = cfg.maps()
    U = interchange_sequence(m1, m2, [0.5, 0.5], 60, 60, 20)
    for i in range(1, 21):
        target = cfg.attractors(1)[0] if i % 2 == 1 else cfg.attractors(2)[0]
        assert normalized_distance(U[i], target) < 1e-9


def test_interchange_matches_naive_loop():
    cfg = random_planar_config(4, 5, 0.5, rng_substream(11, 0))
    m1, m2 = cfg.maps()
    x0 = np.array([0.33, 0.71])
    U = interchange_sequence(m1, m2, x0, 1, 1, 50)
    p = x0.copy()
    for i in range(1, 51):
        p = naive_step(cfg, 1 if i % 2 == 1 else 2, p)
        assert np.allclose(U[i], p, atol=1e-14, rtol=0)


def test_kernel_fast_path_equals_generic_path():
    cfg = random_planar_config(3, 4, 0.8, rng_substream(12, 0))
    m1, m2 = cfg.maps()
    x0 = [0.2, 0.9]
    fast = interchange_sequence(m1, m2, x0, 7, 5, 40)
    slow = interchange_sequence(Wrapped(m1), Wrapped(m2), x0, 7, 5, 40)
    assert np.array_equal(fast, slow)


def test_interchange_rejects_bad_input():
    with pytest.raises(ShapeError):
        interchange_sequence(ConstantMap([0.1]), ConstantMap([0.1, 0.2]), [0.1], 1, 1, 2)
    c = ConstantMap([0.1])
    with pytest.raises(ValueError):
        interchange_sequence(c, c, [0.1], 0, 1, 2)
    with pytest.raises(ValueError):
        interchange_sequence(c, c, [0.1], 1, 1, 0)


def test_generate_W_single_segment():
    cfg = single_basin()
    m1, m2 = cfg.maps()
    W = generate_W(m1, m2, [0.1, 0.1], 7, 3, 1)
    assert len(W) == 8
    assert np.array_equal(W[0], [0.1, 0.1])


def test_generate_W_constant_blocks():
    a, b = ConstantMap([0.2]), ConstantMap([0.9])
    W = generate_W(a, b, [0.5], 3, 2, 4)
    ends = w_segment_ends(3, 2, 4)
    assert np.array_equal(W[ends], interchange_sequence(a, b, [0.5], 3, 2, 4))
    assert W[0, 0] == 0.5
    assert np.all(W[1:4] == 0.2) and np.all(W[5:7] == 0.9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6), st.integers(1, 12), st.integers(1, 12),
       st.sampled_from([0.3, 0.5, 0.8]))
def test_W_subsampled_equals_U(seed, n1, n2, s1, s2, k):
    cfg = random_planar_config(n1, n2, k, rng_substream(seed, 0))
    m1, m2 = cfg.maps()
    x0 = rng_substream(seed, 1).uniform(2)
    U = interchange_sequence(m1, m2, x0, s1, s2, 15)
    W = generate_W(m1, m2, x0, s1, s2, 15)
    assert np.array_equal(W[w_segment_ends(s1, s2, 15)], U)


def test_partition_columns_example():
    U = np.arange(8)
    assert partition_columns(U, 2, 2).tolist() == [[1, 2], [3, 4], [5, 6]]
    assert partition_columns(U, 1, 0).tolist() == [[1]]
    with pytest.raises(ValueError):
        partition_columns(U, 4, 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 5))
def test_partition_round_trip(K, m, extra):
    U = np.arange(1 + (m + 1) * K + extra, dtype=np.float64)
    P = partition_columns(U, K, m)
    assert P.shape == (m + 1, K)
    assert np.array_equal(P.ravel(), U[1: 1 + (m + 1) * K])


# ---------------------------------------------------------------- first-type orbits


def test_first_type_synthetic_four_cycle():
    cyc = [[0.1], [0.4], [0.7], [0.9]]
    U = np.array([[0.5]] + [[0.2], [0.3]] + cyc * 70)
    rep = detect_first_type_orbit(U, 1e-9, max_period=16)
    assert rep.kind == "first_type" and rep.period_K == 4 and rep.loop_residual == 0.0
    assert rep.distinct


def test_first_type_constant_maps_degenerate():
    c = ConstantMap([0.4])
    U = interchange_sequence(c, c, [0.1], 1, 1, 80)
    rep = detect_first_type_orbit(U, 1e-9, max_period=16)
    assert rep.kind == "none" and rep.period_K == 2 and not rep.distinct
    assert rep.anomaly == "fixed_point"


def test_first_type_coincident_elements():
    U = np.array([[0.0]] + [[0.2], [0.2 + 1e-12]] * 100)
    rep = detect_first_type_orbit(U, 1e-9, max_period=16)
    assert rep.kind == "none" and rep.anomaly in ("coincident_elements", "fixed_point")


def test_first_type_odd_period_flagged_not_doubled():
    U = np.array([[0.0]] + [[0.1], [0.5], [0.9]] * 80)
    rep = detect_first_type_orbit(U, 1e-9, max_period=16)
    assert rep.kind == "none" and rep.anomaly == "odd_period"
    assert rep.observed_period == 3 and rep.period_K == 6


def test_first_type_requires_length():
    with pytest.raises(ValueError):
        detect_first_type_orbit(np.zeros((20, 1)), 1e-9, max_period=16)


def brute_force_period(U, tol, max_period):
    tail = U[len(U) - max_period:]
    for K in range(2, max_period + 1, 2):
        prev = U[len(U) - max_period - K: len(U) - K]
        if np.all(np.sqrt(((tail - prev) ** 2).sum(axis=1) / U.shape[1]) < tol):
            return K
    return None


def test_first_type_planar_matches_brute_force_scan():
    for seed in range(30):
        rng = rng_substream(seed, 0)
        cfg = random_planar_config(1 + rng.integers(0, 6), 1 + rng.integers(0, 6), 0.5, rng)
        m1, m2 = cfg.maps()
        U = interchange_sequence(m1, m2, rng.uniform(2), 25, 25, 512)
        rep = detect_first_type_orbit(U, 1e-9, max_period=64)
        assert rep.kind == "first_type"
        assert rep.period_K == brute_force_period(U, 1e-9, 64)
        for K in range(2, rep.period_K, 2):  # minimality
            assert np.max(np.abs(U[-64:] - U[-64 - K:-K])) > 0 or K == rep.period_K


def test_first_type_shift_map_periods():
    m = ShiftMod(6)
    rep = detect_first_type_orbit(interchange_sequence(m, m, [0.0], 1, 1, 100), 1e-9, max_period=12)
    assert rep.kind == "first_type" and rep.period_K == 6


# ---------------------------------------------------------------- orbit loop checks


def test_verify_loop_exact_synthetic():
    c1, c2 = ConstantMap([0.2]), ConstantMap([0.8])
    U = interchange_sequence(c1, c2, [0.5], 1, 1, 80)
    rep = detect_first_type_orbit(U, 1e-9, max_period=16)
    chk = verify_orbit_loop(rep, c1, c2, 1, 1)
    assert chk["loop_residual"] == 0 and all(g == 0 for g in chk["g_residuals"])


def test_verify_loop_planar_and_perturbation():
    cfg = random_planar_config(4, 4, 0.5, rng_substream(21, 0))
    m1, m2 = cfg.maps()
    U = interchange_sequence(m1, m2, [0.3, 0.6], 25, 25, 400)
    rep = detect_first_type_orbit(U, 1e-9, max_period=64)
    chk = verify_orbit_loop(rep, m1, m2, 25, 25)
    assert chk["loop_residual"] < 1e-8 and max(chk["g_residuals"]) < 1e-8
    bad = OrbitReport(**{**rep.__dict__, "elements": rep.elements.copy()})
    bad.elements[1, 0] = min(1.0, bad.elements[1, 0] + 0.1) if bad.elements[1, 0] < 0.9 else bad.elements[1, 0] - 0.1
    chk2 = verify_orbit_loop(bad, m1, m2, 25, 25)
    assert chk2["loop_residual"] >= 0.1 * (1 - cfg.k) / math.sqrt(2)
    with pytest.raises(ValueError):
        verify_orbit_loop(OrbitReport("none", 0, np.zeros((0,))), m1, m2, 1, 1)


# ---------------------------------------------------------------- second-type orbits


def test_second_type_single_basin_equals_attractors():
    cfg = single_basin(k=0.5)
    m1, m2 = cfg.maps()
    rep = detect_second_type_orbit(m1, m2, [0.5, 0.5], [25, 50], 1e-9, 1e-6, n_iters=200)
    assert rep.kind == "second_type" and rep.period_K == 2
    atts = {0: cfg.attractors(1)[0], 1: cfg.attractors(2)[0]}
    for h, b in enumerate(rep.elements):
        assert normalized_distance(b, atts[h % 2]) < 1e-9
    assert all(a < 1e-6 for a in rep.awareness_residuals)


def test_second_type_period_change_reported():
    m = ShiftMod(6)
    rep = detect_second_type_orbit(m, m, [0.0], [1, 3], 1e-9, 1e-6, n_iters=100, max_period=12)
    assert rep.kind == "none"
    assert rep.diagnostics["periods"] == [6, 2]
    assert rep.diagnostics["reason"] == "period changed across schedule"


def test_second_type_schedule_validation():
    m = ShiftMod(6)
    with pytest.raises(ValueError):
        detect_second_type_orbit(m, m, [0.0], [5], 1e-9, 1e-6)


def test_second_type_pairs_schedule():
    cfg = single_basin(k=0.3)
    m1, m2 = cfg.maps()
    rep = detect_second_type_orbit(m1, m2, [0.5, 0.5], [(20, 25), (40, 50)], 1e-9, 1e-6, n_iters=100)
    assert rep.kind == "second_type"
    assert rep.diagnostics["schedule"] == [[20, 25], [40, 50]]


def test_orbit_report_round_trip():
    rep = OrbitReport("first_type", 2, np.array([[0.1, 0.2], [0.3, 0.4]]), 0.0, [0.0, 0.0])
    back = OrbitReport.from_dict(rep.to_dict())
    assert back.to_dict() == rep.to_dict()

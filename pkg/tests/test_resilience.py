import numpy as np
import pytest

from connsim.io.glyphs import CANONICAL, LabeledDataset
from connsim.numerics import rng_substream
from connsim.resilience import (
    UNMATCHED,
    CsiConfig,
    class_separation_index,
    match_examples,
    pairwise_example_distance,
    probe_membership,
    sample_in_ball,
    sweep_csv_rows,
    unit_ball_offsets,
)


def mixtures(train, n, seed):
    rng = rng_substream(seed, 0)
    t = rng.uniform(n)
    X = (1 - t)[:, None] * train.samples[0] + t[:, None] * train.samples[1]
    return LabeledDataset(np.clip(X + 0.05 * (2 * rng.uniform(X.shape) - 1), 0, 1), np.zeros(n, int), 2)


def check_report_invariants(rep):
    n = len(rep.flags)
    assert rep.index_I == sum(f.in_R for f in rep.flags) / n
    assert 0.0 <= rep.index_I <= 1.0
    for f in rep.flags:
        if f.in_H:
            assert f.in_R != f.in_Z
        else:
            assert not (f.in_R or f.in_Z or f.in_T_interior)
        if f.in_T_interior:
            assert f.in_R


def test_tiny_ball_is_center():
    c = np.full(5, 0.5)
    p = sample_in_ball(c, 1e-12, rng_substream(0, 0))
    assert np.linalg.norm(p - c) <= 1e-12


def test_ball_area_ratio_and_bound():
    pts = sample_in_ball(np.zeros(2), 1.0, rng_substream(1, 0), clamp=False, n=10_000)
    r = np.linalg.norm(pts, axis=1)
    assert np.all(r < 1.0)
    assert abs(np.mean(r < 0.5) - 0.25) < 0.02
    off = unit_ball_offsets(64, 500, rng_substream(2, 0))
    assert np.all(np.linalg.norm(off, axis=1) < 1.0)
    with pytest.raises(ValueError):
        sample_in_ball(np.zeros(2), 0.0, rng_substream(0, 0))


def test_match_examples():
    ex = np.array([[0.0, 0.0], [1.0, 1.0]])
    pts = np.array([[0.0, 0.001], [0.99, 1.0], [0.5, 0.5]])
    assert match_examples(pts, ex, 1e-2).tolist() == [0, 1, UNMATCHED]


def test_config_validation(pair_ae):
    _, train = pair_ae
    with pytest.raises(ValueError):
        CsiConfig(T=0.0, probes=train)
    with pytest.raises(ValueError):
        CsiConfig(T=1.0, probes=train, P=0)
    with pytest.raises(ValueError):
        CsiConfig(T=1.0, probes=train, T_grid=[0.5, 0.2])


def test_probe_at_example_is_resilient(pair_ae):
    ae, train = pair_ae
    D = pairwise_example_distance(train)
    f = probe_membership(ae, train, train.samples[0], CsiConfig(T=0.01 * D, probes=train))
    assert f.in_H and f.in_R and f.in_T_interior and not f.in_Z
    assert f.matched_attractor_index == 0


def test_midpoint_probe_sees_shared_ball(pair_ae):
    ae, train = pair_ae
    D = pairwise_example_distance(train)
    mid = 0.5 * (train.samples[0] + train.samples[1])
    f = probe_membership(ae, train, mid, CsiConfig(T=D, probes=train))
    assert f.in_H and f.in_Z and not f.in_R
    assert f.label_set == [0, 1]


def test_unmatched_probe_outside_H(pair_ae):
    ae, train = pair_ae
    x = rng_substream(3, 0).uniform(64)
    f = probe_membership(ae, train, x, CsiConfig(T=0.1, probes=train, tol_attr=1e-4))
    assert not f.in_H and not f.in_R and not f.in_Z and f.matched_attractor_index == UNMATCHED


def test_index_at_small_T_equals_H_fraction(pair_ae):
    ae, train = pair_ae
    probes = mixtures(train, 20, 4)
    rep = class_separation_index(ae, train, CsiConfig(T=1e-9, probes=probes, P=16))
    assert rep.index_I == rep.h_fraction
    check_report_invariants(rep)


def test_single_class_index_equals_H_fraction(pair_ae):
    ae, train = pair_ae
    one = LabeledDataset(train.samples, [0, 0], 1)
    probes = mixtures(train, 10, 5)
    for T in (0.1, 1.0, 5.0):
        rep = class_separation_index(ae, one, CsiConfig(T=T, probes=probes, P=8))
        assert rep.index_I == rep.h_fraction


def test_T_sweep_non_increasing(pair_ae):
    ae, train = pair_ae
    D = pairwise_example_distance(train)
    grid = [f * D for f in (0.01, 0.1, 0.25, 0.5, 1.0, 2.0)]
    probes = mixtures(train, 20, 6)
    rep = class_separation_index(ae, train, CsiConfig(T=grid[0], probes=probes, P=16, T_grid=grid))
    I = [r["I"] for r in rep.sweep]
    assert all(a >= b for a, b in zip(I, I[1:]))
    assert I[0] == rep.index_I
    rows = sweep_csv_rows(rep)
    assert list(rows[0]) == ["T", "I", "t_interior_fraction", "h_fraction", "z_fraction"]
    check_report_invariants(rep)


def test_csi_deterministic(pair_ae):
    ae, train = pair_ae
    probes = mixtures(train, 8, 7)
    cfg = CsiConfig(T=1.0, probes=probes, P=8, seed=3)
    assert class_separation_index(ae, train, cfg).to_dict() == class_separation_index(ae, train, cfg).to_dict()


def test_pairwise_example_distance():
    ds = LabeledDataset(CANONICAL[:3], [0, 0, 1], 2)
    d = pairwise_example_distance(ds)
    assert d == min(np.linalg.norm(CANONICAL[0] - CANONICAL[2]), np.linalg.norm(CANONICAL[1] - CANONICAL[2]))

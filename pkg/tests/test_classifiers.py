import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connsim.classifiers import (
    ClassifierTrainConfig,
    StochasticConfig,
    attractor_of,
    attractorize_stochastic,
    attractorize_vanilla,
    augment,
    evaluate,
    gamma_raw,
    gamma_schedule,
    predict,
    softmax,
    stochastic_classify,
    stochastic_percept,
    train_baseline,
    vanilla_classify,
)
from connsim.io.glyphs import CANONICAL, LabeledDataset
from connsim.numerics import normalized_distance, rng_substream

FAST = ClassifierTrainConfig(epochs=300)


@pytest.fixture(scope="module")
def trained(glyph_ae):
    ae, _, ds = glyph_ae
    atr = attractorize_vanilla(ae, ds, 100, 1e-6)
    return ae, ds, atr, train_baseline(atr, cfg=FAST)


def test_baseline_fits_separable_glyphs():
    ds = LabeledDataset(CANONICAL[:3], np.arange(3), 3)
    m = train_baseline(ds, cfg=FAST)
    assert m.train_accuracy == 1.0
    m2 = train_baseline(ds, cfg=FAST)
    assert all(np.array_equal(a, b) for a, b in zip(m.params.weights, m2.params.weights))
    one = LabeledDataset(CANONICAL[:2], np.zeros(2, dtype=int), 1)
    assert train_baseline(one, cfg=ClassifierTrainConfig(epochs=5)).train_accuracy == 1.0
    with pytest.raises(ValueError):
        train_baseline(LabeledDataset(np.zeros((0, 64)), np.zeros(0), 2))


def naive_softmax(z):
    m = max(z)
    e = [math.exp(v - m) for v in z]
    s = sum(e)
    return [v / s for v in e]


def test_softmax_and_predict():
    z = rng_substream(0, 0).normal(5) * 3
    assert np.allclose(softmax(z), naive_softmax(z), atol=1e-15)
    ds = LabeledDataset(CANONICAL[:3], np.arange(3), 3)
    m = train_baseline(ds, cfg=ClassifierTrainConfig(epochs=2))
    for W in m.params.weights:
        W[:] = 0
    label, p = predict(m, CANONICAL[0])
    assert label == 0 and abs(p.sum() - 1) < 1e-9


def test_attractorize_vanilla_fidelity(trained):
    ae, ds, atr, _ = trained
    assert np.array_equal(atr.labels, ds.labels)
    assert atr.provenance == "vanilla" and atr.converged.all()
    for a, e in zip(atr.samples, ds.samples):
        assert normalized_distance(a, e) < 1e-2
    ident = attractorize_vanilla(ae, ds, 0, 1e-6)
    assert np.array_equal(ident.samples, ds.samples) and not ident.converged.any()


def test_attractorize_near_example(trained):
    ae, ds, atr, _ = trained
    e = ds.samples[2]
    x = np.clip(e + 0.05 * rng_substream(1, 0).normal(64), 0, 1)
    p, conv, _ = attractor_of(ae, x, 100, 1e-6)
    assert conv
    assert normalized_distance(p, atr.samples[2]) < 10 * 1e-6


def test_gamma_schedule():
    assert gamma_raw(0, 2.6) == 2.6
    assert gamma_schedule(0, 2.6) == 1.0
    raw = [gamma_raw(i, 2.6) for i in range(31)]
    assert all(a > b for a, b in zip(raw, raw[1:]))
    assert abs(gamma_raw(10**6, 2.6) - 1) < 1e-5 and gamma_schedule(10**6, 2.6) == 1.0
    with pytest.raises(ValueError):
        gamma_schedule(-1, 2.6)
    with pytest.raises(ValueError):
        gamma_schedule(0, 1.0)


def test_augment_zero_gamma_is_identity():
    x = CANONICAL[4]
    cfg = StochasticConfig(noise_scale=0.3, shift_max=2)
    assert np.array_equal(augment(x, 0.0, cfg, rng_substream(0, 0), (8, 8)), x)
    with pytest.raises(ValueError):
        augment(x, 1.5, cfg, rng_substream(0, 0))


def test_augment_shift_bound():
    img = np.zeros((8, 8))
    img[4, 4] = 1.0
    cfg = StochasticConfig(noise_scale=0.0, shift_max=2)
    rng = rng_substream(2, 0)
    for _ in range(200):
        out = augment(img.ravel(), 1.0, cfg, rng, (8, 8)).reshape(8, 8)
        (r,), (c,) = np.nonzero(out)
        assert abs(r - 4) <= 2 and abs(c - 4) <= 2


def test_augment_noise_sigma():
    cfg = StochasticConfig(noise_scale=0.2, shift_max=0)
    x = np.full(10_000, 0.5)
    out = augment(x, 0.5, cfg, rng_substream(3, 0), clamp=False)
    assert abs((out - x).std() - 0.1) < 0.005


def test_stochastic_degenerate_equals_vanilla(trained):
    ae, ds, _, _ = trained
    cfg = StochasticConfig(J=4, i_max=12, noise_scale=0.0, shift_max=0)
    for x in rng_substream(4, 0).uniform((5, 64)):
        sp = stochastic_percept(ae, x, cfg, (8, 8))
        v, _, _ = attractor_of(ae, x, 12, 0.0)
        assert np.array_equal(sp.F_star, v)
        assert all(np.array_equal(m, v) for m in sp.ensemble)


def test_stochastic_single_member(trained):
    ae, _, _, _ = trained
    sp = stochastic_percept(ae, CANONICAL[5], StochasticConfig(J=1, i_max=5))
    assert np.array_equal(sp.F_star, sp.ensemble[0])


def test_stochastic_hull_and_determinism(trained):
    ae, ds, _, _ = trained
    cfg = StochasticConfig(J=8, i_max=10, seed=5)
    x = 0.5 * (ds.samples[0] + ds.samples[1])
    a = stochastic_percept(ae, x, cfg, (8, 8))
    b = stochastic_percept(ae, x, cfg, (8, 8))
    assert np.array_equal(a.F_star, b.F_star) and np.array_equal(a.ensemble, b.ensemble)
    assert np.all(a.ensemble.min(axis=0) <= a.F_star) and np.all(a.F_star <= a.ensemble.max(axis=0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(0, 1), min_size=3, max_size=3), min_size=1, max_size=12))
def test_running_mean_stays_in_hull(rows):
    # same reduction as the ensemble mean, checked on arbitrary members
    ens = np.array(rows)
    mean = np.zeros(3)
    for j, a in enumerate(ens, start=1):
        mean = mean + (a - mean) / j
    assert np.all(ens.min(axis=0) <= mean) and np.all(mean <= ens.max(axis=0))


def test_vanilla_classify(trained):
    ae, ds, _, model = trained
    for x, y in zip(ds.samples, ds.labels):
        assert vanilla_classify(ae, model, x) == (y, False)
    deep = np.clip(ds.samples[1] + 0.02 * rng_substream(6, 0).normal(64), 0, 1)
    assert vanilla_classify(ae, model, deep)[0] == 1
    label, suspicious = vanilla_classify(ae, model, ds.samples[0], n=0, seed=3)
    assert suspicious and 0 <= label < 3
    assert vanilla_classify(ae, model, ds.samples[0], n=0, seed=3) == (label, True)


def test_stochastic_classify(trained):
    ae, ds, _, _ = trained
    cfg = StochasticConfig(J=5, i_max=10)
    atr_s = attractorize_stochastic(ae, ds, cfg)
    assert atr_s.provenance == "stochastic" and np.array_equal(atr_s.labels, ds.labels)
    model = train_baseline(atr_s, cfg=FAST)
    for x, y in zip(ds.samples, ds.labels):
        assert stochastic_classify(ae, model, x, cfg, (8, 8)) == y
    x = rng_substream(7, 0).uniform(64)
    assert stochastic_classify(ae, model, x, cfg, (8, 8)) == stochastic_classify(ae, model, x, cfg, (8, 8))


def test_stochastic_degenerate_label_equals_vanilla(trained):
    ae, ds, _, model = trained
    cfg = StochasticConfig(J=3, i_max=100, noise_scale=0.0, shift_max=0)
    for x in rng_substream(8, 0).uniform((5, 64)):
        v_label, suspicious = vanilla_classify(ae, model, x, n=100, tol=0.0)
        assert stochastic_classify(ae, model, x, cfg) == predict(model, attractor_of(ae, x, 100, 0.0)[0])[0]
        if not suspicious:
            assert stochastic_classify(ae, model, x, cfg) == v_label


def test_evaluate():
    ds = LabeledDataset(np.zeros((6, 2)), [0, 1, 2, 0, 1, 2], 3)
    labels = iter(ds.labels)
    perfect = evaluate(lambda x: next(labels), ds)
    assert perfect.accuracy == 1.0
    const = evaluate(lambda x: 1, ds)
    assert const.accuracy == 1 / 3
    assert const.accuracy == np.trace(const.confusion) / const.confusion.sum()
    assert const.confusion[:, 1].tolist() == [2, 2, 2]

"""Baseline MLP classifier and its attractor-based wrappers.

The vanilla wrapper classifies the attractor an input converges to under
``dec(enc(.))``.  The stochastic wrapper classifies the mean of an ensemble
of attractors reached while random augmentations, relaxed over the
iterations, perturb each step.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .autoencoder import Adam, AutoencoderModel, MlpParams, MlpSpec, backward, forward, init_params
from .io.glyphs import LabeledDataset
from .numerics import RngStream, normalized_distance, rng_substream

DESK_HIDDEN = (50, 10)


@dataclass
class ClassifierModel:
    spec: MlpSpec  # linear output; softmax is applied on top
    params: MlpParams
    train_accuracy: float = float("nan")

    @property
    def class_count(self) -> int:
        return self.spec.layer_widths[-1]


@dataclass
class ClassifierTrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 500
    seed: int = 0
    activation: str = "tanh"


@dataclass
class StochasticConfig:
    J: int = 50
    beta: float = 2.6
    i_max: int = 30
    noise_scale: float = 0.1
    shift_max: int = 0  # a one-pixel shift is already a large move on 8x8 glyphs
    seed: int = 0

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("J must be >= 1")
        if not self.beta > 1.0:
            raise ValueError("beta must be > 1")
        if self.i_max < 0 or self.shift_max < 0 or self.noise_scale < 0:
            raise ValueError("i_max, shift_max and noise_scale must be non-negative")


@dataclass
class AttractorizedDataset(LabeledDataset):
    provenance: str = "vanilla"
    converged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def train_baseline(dataset: LabeledDataset, hidden=DESK_HIDDEN,
                   cfg: Optional[ClassifierTrainConfig] = None) -> ClassifierModel:
    """Full-batch Adam on softmax cross-entropy."""
    cfg = cfg or ClassifierTrainConfig()
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    spec = MlpSpec((dataset.dim, *hidden, dataset.class_count), cfg.activation, "linear")
    params = init_params(spec, rng_substream(cfg.seed, 0))
    opt = Adam(cfg.learning_rate)
    X = dataset.samples
    Y = np.eye(dataset.class_count)[dataset.labels]
    tensors = params.weights + params.biases
    for epoch in range(cfg.epochs):
        logits, cache = forward(spec, params, X, cache=True)
        P = softmax(logits)
        loss = -float(np.mean(np.log(np.maximum((P * Y).sum(axis=1), 1e-300))))
        if not math.isfinite(loss):
            raise RuntimeError(f"classifier training diverged at epoch {epoch}")
        gW, gb, _ = backward(spec, params, cache, (P - Y) / len(X))
        opt.step(tensors, gW + gb)
    model = ClassifierModel(spec, params)
    pred = np.argmax(forward(spec, params, X), axis=1)
    model.train_accuracy = float(np.mean(pred == dataset.labels))
    return model


def predict(model: ClassifierModel, x) -> tuple[int, np.ndarray]:
    """Argmax label (ties go to the lowest index) and softmax probabilities."""
    p = softmax(forward(model.spec, model.params, np.asarray(x, dtype=np.float64)))
    return int(np.argmax(p)), p


# --------------------------------------------------------------------------
# vanilla


def attractor_of(ae: AutoencoderModel, x, n: int, tol: float) -> tuple[np.ndarray, bool, float]:
    """At most ``n`` dec(enc) steps, stopping once the step residual drops below ``tol``.

    ``tol = 0`` disables the early exit.  Returns (point, converged, residual).
    """
    x = np.asarray(x, dtype=np.float64)
    res = float("inf")
    for _ in range(n):
        y = ae.reconstruct(x)
        res = normalized_distance(y, x)
        x = y
        if res < tol:
            return x, True, res
    return x, False, res


def attractorize_vanilla(ae: AutoencoderModel, dataset: LabeledDataset, n: int = 100,
                         tol: float = 1e-6) -> AttractorizedDataset:
    pts, conv, res = [], [], []
    for x in dataset.samples:
        p, c, r = attractor_of(ae, x, n, tol)
        pts.append(p)
        conv.append(c)
        res.append(r)
    return AttractorizedDataset(np.array(pts).reshape(len(dataset), -1), dataset.labels.copy(),
                                dataset.class_count, dataset.image_shape, provenance="vanilla",
                                converged=np.array(conv, dtype=bool), residuals=np.array(res))


def _fallback_label(x: np.ndarray, class_count: int, seed: int) -> int:
    stream = zlib.crc32(np.ascontiguousarray(x, dtype="<f8").tobytes())
    return rng_substream(seed, stream).integers(0, class_count)


def vanilla_classify(ae: AutoencoderModel, model: ClassifierModel, x, n: int = 100, tol: float = 1e-6,
                     seed: int = 0) -> tuple[int, bool]:
    """(label, suspicious).  Inputs whose iteration does not settle get a seeded random label."""
    x = np.asarray(x, dtype=np.float64)
    p, conv, _ = attractor_of(ae, x, n, tol)
    if not conv:
        return _fallback_label(x, model.class_count, seed), True
    return predict(model, p)[0], False


# --------------------------------------------------------------------------
# stochastic


def gamma_raw(i: int, beta: float) -> float:
    return beta ** (1.0 / (i + 1))


def gamma_schedule(i: int, beta: float) -> float:
    """Augmentation amplitude for iteration ``i``: ``beta**(1/(i+1))`` clamped to [0, 1]."""
    if i < 0:
        raise ValueError("i must be >= 0")
    if not beta > 1.0:
        raise ValueError("beta must be > 1")
    return min(gamma_raw(i, beta), 1.0)


def _shift(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    out = np.zeros_like(img)
    H, W = img.shape
    ys, yd = (slice(0, H - dy), slice(dy, H)) if dy >= 0 else (slice(-dy, H), slice(0, H + dy))
    xs, xd = (slice(0, W - dx), slice(dx, W)) if dx >= 0 else (slice(-dx, W), slice(0, W + dx))
    out[yd, xd] = img[ys, xs]
    return out


def augment(x, gamma: float, cfg: StochasticConfig, rng: RngStream, image_shape=None,
            clamp: bool = True) -> np.ndarray:
    """Gaussian noise with sigma ``gamma * noise_scale``, then an integer translation.

    The translation (only when ``image_shape`` is given) is up to
    ``round(gamma * shift_max)`` pixels per axis with zero fill.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    x = np.array(x, dtype=np.float64)
    sigma = gamma * cfg.noise_scale
    if sigma > 0:
        x = x + sigma * rng.normal(x.shape)
    s = int(round(gamma * cfg.shift_max))
    if s > 0 and image_shape is not None:
        dy, dx = (int(v) for v in rng.integers(-s, s + 1, size=2))
        x = _shift(x.reshape(image_shape), dy, dx).reshape(x.shape)
    if clamp:
        x = np.clip(x, 0.0, 1.0)
    return x


@dataclass
class StochasticPercept:
    F_star: np.ndarray
    ensemble: np.ndarray  # (J, dim)
    final_residuals: np.ndarray  # last-step residual per member


def stochastic_percept(ae: AutoencoderModel, x, cfg: StochasticConfig, image_shape=None) -> StochasticPercept:
    """Ensemble of ``J`` augmented iterations; member ``j`` draws from substream ``(seed, j)``."""
    x0 = np.asarray(x, dtype=np.float64)
    members, finals = [], []
    for j in range(1, cfg.J + 1):
        rng = rng_substream(cfg.seed, j)
        xi = x0
        res = float("nan")
        for i in range(cfg.i_max):
            y = ae.reconstruct(augment(xi, gamma_schedule(i, cfg.beta), cfg, rng, image_shape))
            res = normalized_distance(y, xi)
            xi = y
        members.append(xi)
        finals.append(res)
    ens = np.array(members)
    # running mean in ascending j: exact for identical members, stays inside the hull
    mean = np.zeros_like(x0)
    for j, a in enumerate(ens, start=1):
        mean = mean + (a - mean) / j
    return StochasticPercept(mean, ens, np.array(finals))


def attractorize_stochastic(ae: AutoencoderModel, dataset: LabeledDataset, cfg: StochasticConfig,
                            use_shape: bool = True) -> AttractorizedDataset:
    shape = dataset.image_shape if use_shape else None
    pts, res = [], []
    for x in dataset.samples:
        sp = stochastic_percept(ae, x, cfg, shape)
        pts.append(sp.F_star)
        res.append(float(np.nanmax(sp.final_residuals)) if cfg.i_max else float("nan"))
    return AttractorizedDataset(np.array(pts).reshape(len(dataset), -1), dataset.labels.copy(),
                                dataset.class_count, dataset.image_shape, provenance="stochastic",
                                converged=np.ones(len(dataset), dtype=bool), residuals=np.array(res))


def stochastic_classify(ae: AutoencoderModel, model: ClassifierModel, x, cfg: StochasticConfig,
                        image_shape=None) -> int:
    return predict(model, stochastic_percept(ae, x, cfg, image_shape).F_star)[0]


# --------------------------------------------------------------------------
# evaluation


@dataclass
class Evaluation:
    accuracy: float
    confusion: np.ndarray  # rows = true class, columns = predicted


def evaluate(classify: Callable[[np.ndarray], int], dataset: LabeledDataset) -> Evaluation:
    C = dataset.class_count
    conf = np.zeros((C, C), dtype=np.int64)
    for x, y in zip(dataset.samples, dataset.labels):
        conf[y, int(classify(x))] += 1
    acc = float(np.trace(conf) / len(dataset)) if len(dataset) else float("nan")
    return Evaluation(acc, conf)

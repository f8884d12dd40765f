"""Fully connected networks trained from scratch, and autoencoders that memorize.

An overparameterized autoencoder trained to near-zero reconstruction error
turns its training examples into attracting fixed points of ``dec(enc(.))``.
Everything here is plain numpy: forward pass, backprop, Adam, finite
difference gradient checks, and a flat binary model container.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dynamics import AutoencoderMap, detect_cycle, iterate_map, percept, percept_batch
from .numerics import RngStream, normalized_distance, rng_substream

ACTIVATIONS = ("relu", "tanh", "cosid")
OUTPUT_ACTIVATIONS = ("sigmoid", "linear")


class TrainingError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple
    activation: str = "tanh"
    output_activation: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 2 or min(self.layer_widths) < 1:
            raise ValueError("need at least two positive layer widths")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    def layer_activations(self) -> list[str]:
        return [self.activation] * (self.n_layers - 1) + [self.output_activation]


@dataclass
class MlpParams:
    weights: list  # (out, in) arrays
    biases: list

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "cosid":
        return np.cos(z)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "cosid":
        return -np.sin(z)
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def init_params(spec: MlpSpec, rng: RngStream) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    ws, bs = [], []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        ws.append((2.0 * rng.uniform((fan_out, fan_in)) - 1.0) * bound)
        bs.append(np.zeros(fan_out))
    return MlpParams(ws, bs)


def forward(spec: MlpSpec, params: MlpParams, x, cache: bool = False):
    """Affine map plus activation per layer; accepts one vector or a batch of rows."""
    a = np.asarray(x, dtype=np.float64)
    single = a.ndim == 1
    if single:
        a = a[None, :]
    if a.shape[1] != spec.layer_widths[0]:
        raise ValueError(f"input width {a.shape[1]} does not match {spec.layer_widths[0]}")
    zs, acts = [], [a]
    for W, b, name in zip(params.weights, params.biases, spec.layer_activations()):
        z = a @ W.T + b
        a = _act(name, z)
        zs.append(z)
        acts.append(a)
    out = a[0] if single else a
    if cache:
        return out, (zs, acts)
    return out


def backward(spec: MlpSpec, params: MlpParams, cache, d_out: np.ndarray):
    """Gradients of a scalar loss given dLoss/dOutput; returns (dW list, db list, dInput)."""
    zs, acts = cache
    delta = np.asarray(d_out, dtype=np.float64).reshape(acts[-1].shape)
    names = spec.layer_activations()
    gW, gb = [None] * spec.n_layers, [None] * spec.n_layers
    for l in range(spec.n_layers - 1, -1, -1):
        delta = delta * _act_grad(names[l], zs[l], acts[l + 1])
        gW[l] = delta.T @ acts[l]
        gb[l] = delta.sum(axis=0)
        delta = delta @ params.weights[l]
    return gW, gb, delta


def mse_loss_and_grad(spec: MlpSpec, params: MlpParams, X: np.ndarray, Y: np.ndarray):
    out, cache = forward(spec, params, X, cache=True)
    diff = out - Y
    loss = float(np.mean(diff * diff))
    gW, gb, _ = backward(spec, params, cache, 2.0 * diff / diff.size)
    return loss, gW, gb


def grad_check(spec: MlpSpec, params: MlpParams, x, n_checks: int = 50, h: float = 1e-5,
               seed: int = 0, target=None) -> float:
    """Max relative error between backprop and central differences of the MSE loss.

    ``target`` defaults to the input (reconstruction loss) when the output
    width equals the input width, otherwise zeros.  Relative error uses
    ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if target is None:
        Y = X if spec.layer_widths[-1] == spec.layer_widths[0] else np.zeros((len(X), spec.layer_widths[-1]))
    else:
        Y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    _, gW, gb = mse_loss_and_grad(spec, params, X, Y)
    slots = [(kind, l) for l in range(spec.n_layers) for kind in ("W", "b")]
    sizes = np.array([params.weights[l].size if kind == "W" else params.biases[l].size for kind, l in slots])
    total = int(sizes.sum())
    rng = rng_substream(seed, 0x6C)
    picks = rng.permutation(total)[:n_checks] if total > n_checks else np.arange(total)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    worst = 0.0
    for flat_i in picks:
        s = int(np.searchsorted(offsets, flat_i, side="right") - 1)
        kind, l = slots[s]
        local = int(flat_i - offsets[s])
        arr = params.weights[l] if kind == "W" else params.biases[l]
        grad = (gW[l] if kind == "W" else gb[l]).ravel()[local]
        view = arr.reshape(-1)
        orig = view[local]
        view[local] = orig + h
        lp = float(np.mean((forward(spec, params, X) - Y) ** 2))
        view[local] = orig - h
        lm = float(np.mean((forward(spec, params, X) - Y) ** 2))
        view[local] = orig
        num = (lp - lm) / (2.0 * h)
        err = abs(grad - num) / max(abs(grad), abs(num), 1e-8)
        worst = max(worst, err)
    return worst


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: Optional[list] = None
        self.v: Optional[list] = None

    def step(self, params: list, grads: list) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class Sgd:
    def __init__(self, lr: float = 1e-2):
        self.lr = lr

    def step(self, params: list, grads: list) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 50_000
    batch_size: int = 0  # 0 = full batch
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    target_mse: float = 1e-5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs <= 0:
            raise ValueError("epochs must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def make_optimizer(self):
        if self.optimizer == "adam":
            return Adam(self.learning_rate, self.beta1, self.beta2, self.eps)
        return Sgd(self.learning_rate)


@dataclass
class AutoencoderModel:
    encoder_spec: MlpSpec
    encoder: MlpParams
    decoder_spec: MlpSpec
    decoder: MlpParams

    def __post_init__(self):
        if self.encoder_spec.layer_widths[-1] != self.decoder_spec.layer_widths[0]:
            raise ValueError("encoder output width must equal decoder input width")
        if self.decoder_spec.layer_widths[-1] != self.encoder_spec.layer_widths[0]:
            raise ValueError("decoder output width must equal encoder input width")

    @property
    def input_dim(self) -> int:
        return self.encoder_spec.layer_widths[0]

    @property
    def latent_dim(self) -> int:
        return self.encoder_spec.layer_widths[-1]

    def encode(self, x):
        return forward(self.encoder_spec, self.encoder, x)

    def decode(self, z):
        return forward(self.decoder_spec, self.decoder, z)

    def reconstruct(self, x):
        return self.decode(self.encode(x))

    def as_map(self) -> AutoencoderMap:
        return AutoencoderMap(self)


def desk_specs(input_dim: int = 64, hidden=(32, 16), latent: int = 2,
               activation: str = "tanh") -> tuple[MlpSpec, MlpSpec]:
    """Encoder ``[in, *hidden, latent]`` and its mirrored decoder with a sigmoid output."""
    enc = MlpSpec((input_dim, *hidden, latent), activation, "linear")
    dec = MlpSpec((latent, *reversed(hidden), input_dim), activation, "sigmoid")
    return enc, dec


def train_autoencoder(data, specs: tuple[MlpSpec, MlpSpec], cfg: TrainConfig):
    """Minimize mean squared reconstruction error; returns (model, loss history).

    The history holds the full-data loss before each update, so its last
    entry is the loss of the returned parameters when training stops early.
    """
    X = np.atleast_2d(np.asarray(data, dtype=np.float64))
    enc_spec, dec_spec = specs
    if X.shape[1] != enc_spec.layer_widths[0]:
        raise ValueError("data width does not match the encoder input")
    rng = rng_substream(cfg.seed, 0)
    enc = init_params(enc_spec, rng)
    dec = init_params(dec_spec, rng)
    tensors = enc.weights + enc.biases + dec.weights + dec.biases
    opt = cfg.make_optimizer()
    batch = len(X) if cfg.batch_size <= 0 else min(cfg.batch_size, len(X))
    order_rng = rng_substream(cfg.seed, 1)
    history = []
    for epoch in range(cfg.epochs):
        idx = np.arange(len(X)) if batch == len(X) else order_rng.permutation(len(X))
        epoch_loss = 0.0
        for start in range(0, len(X), batch):
            xb = X[idx[start:start + batch]]
            lat, c_enc = forward(enc_spec, enc, xb, cache=True)
            out, c_dec = forward(dec_spec, dec, lat, cache=True)
            diff = out - xb
            loss = float(np.mean(diff * diff))
            if not math.isfinite(loss):
                raise TrainingError(epoch, loss)
            epoch_loss += loss * len(xb)
            gWd, gbd, d_lat = backward(dec_spec, dec, c_dec, 2.0 * diff / diff.size)
            gWe, gbe, _ = backward(enc_spec, enc, c_enc, d_lat)
            if batch == len(X) and loss < cfg.target_mse:
                history.append(loss)
                return AutoencoderModel(enc_spec, enc, dec_spec, dec), history
            opt.step(tensors, gWe + gbe + gWd + gbd)
        epoch_loss /= len(X)
        history.append(epoch_loss)
        if batch != len(X) and epoch_loss < cfg.target_mse:
            break
    return AutoencoderModel(enc_spec, enc, dec_spec, dec), history


def reconstruction_mse(model: AutoencoderModel, data) -> float:
    X = np.atleast_2d(np.asarray(data, dtype=np.float64))
    return float(np.mean((model.reconstruct(X) - X) ** 2))


def memorization_check(model: AutoencoderModel, train_set, tol: float) -> list[dict]:
    out = []
    for e in np.atleast_2d(np.asarray(train_set, dtype=np.float64)):
        r = normalized_distance(model.reconstruct(e), e)
        out.append({"residual": r, "is_fixed_point": r < tol})
    return out


@dataclass
class Census:
    centers: list = field(default_factory=list)
    counts: list = field(default_factory=list)
    cycle_count: int = 0
    cycle_periods: list = field(default_factory=list)
    nonconverged_count: int = 0
    n_samples: int = 0

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "clusters": [{"center": np.asarray(c).tolist(), "count": int(n)} for c, n in zip(self.centers, self.counts)],
            "cycle_count": self.cycle_count,
            "cycle_periods": list(self.cycle_periods),
            "nonconverged_count": self.nonconverged_count,
        }


def basin_survey(model: AutoencoderModel, n_samples: int, tol: float, max_steps: int, rng: RngStream,
                 cluster_radius: Optional[float] = None, max_period: int = 64) -> Census:
    """Run percepts from uniform random inputs and tally where they end up.

    Converged endpoints are grouped greedily (in sample order) into clusters
    of radius ``10 * tol``.  Non-converged samples are iterated further and
    checked for a cycle of period >= 2.
    """
    census = Census(n_samples=n_samples)
    if n_samples == 0:
        return census
    radius = 10.0 * tol if cluster_radius is None else cluster_radius
    amap = model.as_map()
    X = rng.uniform((n_samples, model.input_dim))
    res = percept_batch(amap, X, tol, max_steps)
    for i in range(n_samples):
        if res.converged[i]:
            p = res.points[i]
            for c, center in enumerate(census.centers):
                if normalized_distance(p, center) < radius:
                    census.counts[c] += 1
                    break
            else:
                census.centers.append(p.copy())
                census.counts.append(1)
            continue
        tr = iterate_map(amap, res.points[i], 4 * max_period)
        cyc = detect_cycle(tr, 10.0 * tol, max_period=max_period)
        if cyc is not None and cyc.period >= 2:
            census.cycle_count += 1
            census.cycle_periods.append(cyc.period)
        else:
            census.nonconverged_count += 1
    return census


def match_cluster(census: Census, point, radius: float) -> Optional[int]:
    for c, center in enumerate(census.centers):
        if normalized_distance(point, center) < radius:
            return c
    return None


# --------------------------------------------------------------------------
# binary container
#
#   bytes 0..7   magic b"CONN-AE1"
#   then, for encoder and decoder in turn, little-endian int32s:
#       n_widths, widths[n_widths], activation_code, output_activation_code
#   then float64 little-endian parameters: encoder layers then decoder
#   layers; per layer the weight matrix (out x in, row-major) then the bias.
#   activation codes: relu=0 tanh=1 cosid=2; output codes: sigmoid=0 linear=1

MAGIC = b"CONN-AE1"


def _spec_header(spec: MlpSpec) -> bytes:
    w = spec.layer_widths
    return struct.pack(f"<i{len(w)}iii", len(w), *w, ACTIVATIONS.index(spec.activation),
                       OUTPUT_ACTIVATIONS.index(spec.output_activation))


def save_model(model: AutoencoderModel, path) -> None:
    parts = [MAGIC, _spec_header(model.encoder_spec), _spec_header(model.decoder_spec)]
    for params in (model.encoder, model.decoder):
        for W, b in zip(params.weights, params.biases):
            parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
            parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path) -> AutoencoderModel:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise ValueError("not a CONN-AE1 model file")
    pos = 8
    specs = []
    for _ in range(2):
        (n,) = struct.unpack_from("<i", buf, pos)
        pos += 4
        widths = struct.unpack_from(f"<{n}i", buf, pos)
        pos += 4 * n
        act, out_act = struct.unpack_from("<ii", buf, pos)
        pos += 8
        specs.append(MlpSpec(widths, ACTIVATIONS[act], OUTPUT_ACTIVATIONS[out_act]))
    params = []
    for spec in specs:
        ws, bs = [], []
        for fi, fo in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
            ws.append(np.frombuffer(buf, "<f8", fo * fi, pos).reshape(fo, fi).astype(np.float64))
            pos += 8 * fo * fi
            bs.append(np.frombuffer(buf, "<f8", fo, pos).astype(np.float64))
            pos += 8 * fo
        params.append(MlpParams(ws, bs))
    if pos != len(buf):
        raise ValueError("trailing bytes in model file")
    return AutoencoderModel(specs[0], params[0], specs[1], params[1])


def percept_of(model: AutoencoderModel, x, tol: float, max_steps: int = 10_000):
    return percept(model.as_map(), x, tol, max_steps)


__all__: Sequence[str] = [
    "MlpSpec", "MlpParams", "TrainConfig", "AutoencoderModel", "TrainingError", "Census",
    "init_params", "forward", "backward", "grad_check", "train_autoencoder", "memorization_check",
    "basin_survey", "desk_specs", "save_model", "load_model", "reconstruction_mse",
]

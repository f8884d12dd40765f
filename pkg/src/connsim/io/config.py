"""Sectioned key = value run configuration with a fixed schema.

Unknown sections or keys are rejected and every value is range-checked.
``RunConfig.to_text()`` writes every key (defaults included) so that parsing
the echo gives back an equal config.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional


class ConfigError(ValueError):
    pass


KINDS = ("planar", "conn", "train-ae", "survey", "classify", "csi", "orbit-check")


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit_open(v):
    return 0 < v < 1


def _ge1(v):
    return v >= 1


@dataclass(frozen=True)
class Key:
    kind: str  # int | float | str | ilist | flist | plist
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    choices: tuple = ()
    required: bool = False


SCHEMA: dict[str, dict[str, Key]] = {
    "experiment": {
        "kind": Key("str", "planar", choices=KINDS),
        "seed": Key("int", 0, _nonneg),
        "out": Key("str", "out"),
    },
    "planar": {
        "n_configs": Key("int", 1, _ge1),
        "n1": Key("int", 3, _ge1),
        "n2": Key("int", 3, _ge1),
        "k": Key("float", 0.5, _unit_open),
        "nsteps1": Key("int", 25, _ge1),
        "nsteps2": Key("int", 25, _ge1),
        "n_iters": Key("int", 512, lambda v: v >= 8),
        "schedule": Key("ilist", [25, 50], lambda v: len(v) >= 2 and all(b > a >= 1 for a, b in zip(v, v[1:]))),
        "tol": Key("float", 1e-9, _pos),
        "orbit_match_tol": Key("float", 1e-6, _pos),
        "max_period": Key("int", 64, _ge1),
        "x0": Key("flist", [], lambda v: len(v) in (0, 2) and all(0 <= c <= 1 for c in v)),
        "cuts_a": Key("flist", []),
        "cuts_b": Key("flist", []),
        "attractors_1": Key("plist", []),
        "attractors_2": Key("plist", []),
    },
    "autoencoder": {
        "classes": Key("int", 3, lambda v: 1 <= v <= 8),
        "per_class": Key("int", 1, _ge1),
        "jitter": Key("float", 0.0, lambda v: 0 <= v <= 0.1),
        "hidden": Key("ilist", [32, 16], lambda v: all(w >= 1 for w in v)),
        "latent": Key("int", 2, _ge1),
        "activation": Key("str", "tanh", choices=("tanh", "relu", "cosid")),
        "learning_rate": Key("float", 1e-3, _pos),
        "epochs": Key("int", 50_000, _ge1),
        "target_mse": Key("float", 1e-5, _pos),
        "tol": Key("float", 1e-6, _pos),
        "memo_tol": Key("float", 1e-2, _pos),
        "max_steps": Key("int", 10_000, _ge1),
        "survey_samples": Key("int", 2000, _nonneg),
        "model": Key("str", ""),
        "idx_images": Key("str", ""),
        "idx_labels": Key("str", ""),
    },
    "conn": {
        "persons": Key("str", "planar", choices=("planar", "autoencoder")),
        "nsteps1": Key("int", 60, _ge1),
        "nsteps2": Key("int", 60, _ge1),
        "n_iters": Key("int", 200, lambda v: v >= 8),
        "schedule": Key("ilist", [60, 120], lambda v: len(v) >= 2 and all(b > a >= 1 for a, b in zip(v, v[1:]))),
        "tol": Key("float", 1e-6, _pos),
        "orbit_match_tol": Key("float", 1e-2, _pos),
    },
    "classifier": {
        "classes": Key("int", 3, lambda v: 1 <= v <= 8),
        "train_sizes": Key("ilist", [1, 2], lambda v: len(v) >= 1 and all(s >= 1 for s in v)),
        "test_per_class": Key("int", 5, _ge1),
        "jitter": Key("float", 0.05, lambda v: 0 <= v <= 0.1),
        "test_jitter": Key("float", 0.1, lambda v: 0 <= v <= 0.1),
        "hidden": Key("ilist", [50, 10], lambda v: all(w >= 1 for w in v)),
        "epochs": Key("int", 300, _ge1),
        "learning_rate": Key("float", 1e-2, _pos),
        "n_vanilla": Key("int", 100, _nonneg),
        "J": Key("int", 10, _ge1),
        "beta": Key("float", 2.6, lambda v: v > 1),
        "i_max": Key("int", 30, _nonneg),
        "noise_scale": Key("float", 0.1, _nonneg),
        "shift_max": Key("int", 0, _nonneg),
    },
    "csi": {
        "T": Key("float", None, _pos),
        "P": Key("int", 64, _ge1),
        "n_probes": Key("int", 50, _ge1),
        "tol_attr": Key("float", 1e-2, _pos),
        "T_grid": Key("flist", [], lambda v: all(t > 0 for t in v) and all(b > a for a, b in zip(v, v[1:]))),
        "classes": Key("int", 2, lambda v: 2 <= v <= 8),
        "max_steps": Key("int", 2000, _ge1),
    },
}


def _fmt(kind: str, v) -> str:
    if v is None:
        return ""
    if kind == "float":
        return repr(float(v))
    if kind == "ilist":
        return ", ".join(str(int(x)) for x in v)
    if kind == "flist":
        return ", ".join(repr(float(x)) for x in v)
    if kind == "plist":
        return ", ".join(f"{float(p[0])!r} {float(p[1])!r}" for p in v)
    return str(v)


def _parse(kind: str, text: str, where: str):
    text = text.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            v = float(text)
            if not math.isfinite(v):
                raise ValueError("non-finite")
            return v
        if kind == "ilist":
            return [int(t) for t in text.split(",") if t.strip()]
        if kind == "flist":
            return [float(t) for t in text.split(",") if t.strip()]
        if kind == "plist":
            out = []
            for t in text.split(","):
                if t.strip():
                    a, b = t.split()
                    out.append([float(a), float(b)])
            return out
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r} as {kind}") from exc


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)  # section -> key -> value

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value) -> None:
        spec = SCHEMA[section][key]
        _validate(section, key, spec, value)
        self.values[section][key] = value

    def to_text(self) -> str:
        lines = []
        for sec, keys in SCHEMA.items():
            lines.append(f"[{sec}]")
            for key, spec in keys.items():
                lines.append(f"{key} = {_fmt(spec.kind, self.values[sec][key])}")
            lines.append("")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {s: dict(v) for s, v in self.values.items()}


def _validate(section, key, spec: Key, value) -> None:
    where = f"[{section}] {key}"
    if value is None:
        return
    if spec.choices and value not in spec.choices:
        raise ConfigError(f"{where}: {value!r} not one of {spec.choices}")
    if spec.check is not None and not spec.check(value):
        raise ConfigError(f"{where}: value {value!r} out of range")


def defaults() -> RunConfig:
    return RunConfig({s: {k: (list(v.default) if isinstance(v.default, list) else v.default)
                          for k, v in keys.items()} for s, keys in SCHEMA.items()})


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    cfg = defaults()
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            spec = SCHEMA[sec][key]
            value = None if (raw.strip() == "" and spec.kind in ("int", "float")) else _parse(spec.kind, raw, f"[{sec}] {key}")
            _validate(sec, key, spec, value)
            cfg.values[sec][key] = value
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())

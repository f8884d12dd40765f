"""JSON report envelopes and CSV curves; output bytes depend only on config and seed."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

TOOL = "connsim"
VERSION = "0.1.0"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _portable(cfg):
    # the output directory is where the report lands, not part of what it reports
    if isinstance(cfg, dict) and isinstance(cfg.get("experiment"), dict):
        cfg = dict(cfg, experiment={k: v for k, v in cfg["experiment"].items() if k != "out"})
    return cfg


def envelope(kind: str, config, seed: int, payload, work: dict | None = None) -> dict:
    """``timing`` carries deterministic work counters only; wall-clock time goes to the log."""
    return {
        "tool": TOOL,
        "version": VERSION,
        "kind": kind,
        "seed": int(seed),
        "config": _portable(config.to_dict() if hasattr(config, "to_dict") else config),
        "timing": work or {},
        "payload": payload,
    }


def write_json(obj, path) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_csv(rows: list[dict], columns: list[str], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: (repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c]) for c in columns})

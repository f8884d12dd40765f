"""Command-line entry point.

Every subcommand reads an optional sectioned config (``--config``), lets
``--seed`` override ``[experiment] seed``, and writes its reports under
``--out`` with fixed file names.  Exit codes: 0 success, 1 usage error,
2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .autoencoder import (
    TrainConfig,
    basin_survey,
    desk_specs,
    load_model,
    memorization_check,
    reconstruction_mse,
    save_model,
    train_autoencoder,
)
from .classifiers import (
    ClassifierTrainConfig,
    StochasticConfig,
    attractorize_stochastic,
    attractorize_vanilla,
    evaluate,
    predict,
    stochastic_classify,
    train_baseline,
    vanilla_classify,
)
from .dynamics import AutoencoderMap, OrbitReport, detect_first_type_orbit, verify_orbit_loop
from .io.config import ConfigError, RunConfig, defaults, load_config
from .io.glyphs import CANONICAL, LabeledDataset, synth_glyphs
from .io.idx import read_idx
from .io.pgm import write_strip
from .io.reports import envelope, read_json, write_csv, write_json
from .network import ConnExperiment, run_conn, second_type_study
from .numerics import normalized_distance, rng_substream
from .planar import PlanarConfig, attractor_hop_cycle, nearest_attractor, random_planar_config, run_algorithm2
from .resilience import CsiConfig, class_separation_index, pairwise_example_distance, sweep_csv_rows

log = logging.getLogger("connsim")

# substream ids, fixed so every subcommand draws from its own streams
S_PLANAR, S_X0, S_GLYPH_TRAIN, S_GLYPH_TEST, S_SURVEY, S_PROBES = 11, 12, 21, 22, 31, 41


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


# --------------------------------------------------------------------------
# helpers


def _planar_config(cfg: RunConfig, index: int, seed: int) -> PlanarConfig:
    p = cfg["planar"]
    if p["cuts_a"] or p["attractors_1"]:
        return PlanarConfig(p["n1"], p["n2"], p["k"], tuple(p["cuts_a"]), tuple(p["cuts_b"]),
                            tuple(tuple(a) for a in p["attractors_1"]), tuple(tuple(a) for a in p["attractors_2"]))
    return random_planar_config(p["n1"], p["n2"], p["k"], rng_substream(seed, S_PLANAR * 1000 + index))


def _x0(cfg: RunConfig, index: int, seed: int) -> np.ndarray:
    x0 = cfg["planar"]["x0"]
    if x0:
        return np.array(x0, dtype=np.float64)
    return rng_substream(seed, S_X0 * 1000 + index).uniform(2)


def _glyph_train(cfg: RunConfig, seed: int) -> LabeledDataset:
    a = cfg["autoencoder"]
    if a["idx_images"]:
        return read_idx(a["idx_images"], a["idx_labels"])
    return synth_glyphs(a["classes"], a["per_class"], rng_substream(seed, S_GLYPH_TRAIN), a["jitter"])


def _train_ae(cfg: RunConfig, data: np.ndarray, seed: int):
    a = cfg["autoencoder"]
    specs = desk_specs(data.shape[1], tuple(a["hidden"]), a["latent"], a["activation"])
    tc = TrainConfig(learning_rate=a["learning_rate"], epochs=a["epochs"], seed=seed, target_mse=a["target_mse"])
    return train_autoencoder(data, specs, tc)


def _orbit_payload(orbit: OrbitReport) -> dict:
    return orbit.to_dict()


# --------------------------------------------------------------------------
# subcommands


def cmd_planar(cfg: RunConfig, out: Path, seed: int) -> dict:
    p = cfg["planar"]
    runs, rows = [], []
    for i in range(p["n_configs"]):
        pc = _planar_config(cfg, i, seed)
        x0 = _x0(cfg, i, seed)
        m1, m2 = pc.maps()
        U = run_algorithm2(pc, x0, p["nsteps1"], p["nsteps2"], p["n_iters"])
        orbit = detect_first_type_orbit(U, p["tol"], max_period=min(p["max_period"], len(U) // 4))
        if len(orbit.elements):
            chk = verify_orbit_loop(orbit, m1, m2, p["nsteps1"], p["nsteps2"])
            orbit.loop_residual, orbit.g_fixed_residuals = chk["loop_residual"], chk["g_residuals"]
        exp = ConnExperiment(m1, m2, x0, p["nsteps1"], p["nsteps2"], p["n_iters"], tol=p["tol"],
                             orbit_match_tol=p["orbit_match_tol"], max_period=p["max_period"])
        second = second_type_study(exp, p["schedule"])
        _, hop = attractor_hop_cycle(pc, x0)
        runs.append({
            "index": i,
            "planar_config": pc.to_dict(),
            "x0": x0,
            "nsteps1": p["nsteps1"], "nsteps2": p["nsteps2"], "n_iters": p["n_iters"],
            "first_type": _orbit_payload(orbit),
            "second_type": _orbit_payload(second),
            "attractor_hop_cycle": [list(n) for n in hop],
        })
        for t, pt in enumerate(U):
            rows.append({"config": i, "iter": t + 1, "x": float(pt[0]), "y": float(pt[1])})
    write_csv(rows, ["config", "iter", "x", "y"], out / "planar_sequence.csv")
    payload = {"runs": runs}
    write_json(envelope("planar", cfg, seed, payload, {"configs": len(runs)}), out / "planar_report.json")
    return payload


def cmd_train_ae(cfg: RunConfig, out: Path, seed: int) -> dict:
    a = cfg["autoencoder"]
    ds = _glyph_train(cfg, seed)
    model, hist = _train_ae(cfg, ds.samples, seed)
    save_model(model, out / "model.bin")
    memo = memorization_check(model, ds.samples, a["memo_tol"])
    write_csv([{"epoch": i, "mse": h} for i, h in enumerate(hist)], ["epoch", "mse"], out / "loss.csv")
    write_strip(ds.samples, ds.image_shape, out / "train.pgm")
    write_strip(model.reconstruct(ds.samples), ds.image_shape, out / "reconstruction.pgm")
    payload = {
        "n_examples": len(ds), "labels": ds.labels, "epochs_run": len(hist),
        "final_mse": reconstruction_mse(model, ds.samples), "memorization": memo,
        "all_fixed_points": all(m["is_fixed_point"] for m in memo),
    }
    write_json(envelope("train-ae", cfg, seed, payload, {"epochs": len(hist)}), out / "train_ae_report.json")
    return payload


def cmd_survey(cfg: RunConfig, out: Path, seed: int) -> dict:
    a = cfg["autoencoder"]
    ds = _glyph_train(cfg, seed)
    model = load_model(a["model"]) if a["model"] else _train_ae(cfg, ds.samples, seed)[0]
    census = basin_survey(model, a["survey_samples"], a["tol"], a["max_steps"], rng_substream(seed, S_SURVEY))
    matched = []
    for e in ds.samples:
        d = [normalized_distance(c, e) for c in census.centers]
        matched.append(int(np.argmin(d)) if d and min(d) < a["memo_tol"] else -1)
    payload = {"census": census.to_dict(), "training_example_cluster": matched}
    write_json(envelope("survey", cfg, seed, payload, {"samples": a["survey_samples"]}), out / "survey_report.json")
    return payload


def _odd_even_persons(cfg: RunConfig, seed: int):
    ds = _glyph_train(cfg, seed)
    if ds.class_count < 2:
        raise ConfigError("[autoencoder] classes must be >= 2 for autoencoder persons")
    sets = [ds.samples[ds.labels % 2 == 0], ds.samples[ds.labels % 2 == 1]]
    models = [_train_ae(cfg, s, seed + 1 + i)[0] for i, s in enumerate(sets)]
    x0 = 0.5 * (CANONICAL[0] + CANONICAL[1]) if ds.dim == CANONICAL.shape[1] else ds.samples.mean(axis=0)
    return models, x0, ds.image_shape


def cmd_conn(cfg: RunConfig, out: Path, seed: int) -> dict:
    c = cfg["conn"]
    payload: dict = {"persons": c["persons"]}
    if c["persons"] == "planar":
        pc = _planar_config(cfg, 0, seed)
        m1, m2 = pc.maps()
        x0 = _x0(cfg, 0, seed)
        payload["planar_config"] = pc.to_dict()
        shape = None
    else:
        models, x0, shape = _odd_even_persons(cfg, seed)
        for i, m in enumerate(models, start=1):
            save_model(m, out / f"person{i}.bin")
        m1, m2 = AutoencoderMap(models[0]), AutoencoderMap(models[1])
    exp = ConnExperiment(m1, m2, x0, c["nsteps1"], c["nsteps2"], c["n_iters"], seed=seed, tol=c["tol"],
                         orbit_match_tol=c["orbit_match_tol"])
    res = run_conn(exp)
    second = second_type_study(exp, c["schedule"])
    payload.update({
        "x0": x0, "nsteps1": c["nsteps1"], "nsteps2": c["nsteps2"], "n_iters": c["n_iters"],
        "U_length": len(res.U), "W_length": len(res.W),
        "first_type": _orbit_payload(res.orbit), "second_type": _orbit_payload(second),
    })
    if shape is not None:
        write_strip(res.U[-8:], shape, out / "conn_tail.pgm")
        if second.found:
            write_strip(second.elements, shape, out / "second_type_orbit.pgm")
    else:
        write_csv([{"iter": t + 1, "x": float(p[0]), "y": float(p[1])} for t, p in enumerate(res.U)],
                  ["iter", "x", "y"], out / "conn_sequence.csv")
    write_json(envelope("conn", cfg, seed, payload, {"exchanges": c["n_iters"]}), out / "conn_report.json")
    return payload


def cmd_classify(cfg: RunConfig, out: Path, seed: int) -> dict:
    k = cfg["classifier"]
    a = cfg["autoencoder"]
    test = synth_glyphs(k["classes"], k["test_per_class"], rng_substream(seed, S_GLYPH_TEST), k["test_jitter"])
    scfg = StochasticConfig(J=k["J"], beta=k["beta"], i_max=k["i_max"], noise_scale=k["noise_scale"],
                            shift_max=k["shift_max"], seed=seed)
    ccfg = ClassifierTrainConfig(learning_rate=k["learning_rate"], epochs=k["epochs"], seed=seed)
    rows, details = [], []
    for size in k["train_sizes"]:
        train = synth_glyphs(k["classes"], size, rng_substream(seed, S_GLYPH_TRAIN * 100 + size), k["jitter"])
        ae, hist = _train_ae(cfg, train.samples, seed)
        base = train_baseline(train, tuple(k["hidden"]), ccfg)
        base_acc = evaluate(lambda x: predict(base, x)[0], test)
        atr = attractorize_vanilla(ae, train, k["n_vanilla"], a["tol"])
        m_v = train_baseline(atr, tuple(k["hidden"]), ccfg)
        van = evaluate(lambda x: vanilla_classify(ae, m_v, x, k["n_vanilla"], a["tol"], seed)[0], test)
        van_train = evaluate(lambda x: vanilla_classify(ae, m_v, x, k["n_vanilla"], a["tol"], seed)[0], train)
        atr_s = attractorize_stochastic(ae, train, scfg)
        m_s = train_baseline(atr_s, tuple(k["hidden"]), ccfg)
        sto = evaluate(lambda x: stochastic_classify(ae, m_s, x, scfg, test.image_shape), test)
        for variant, ev in (("baseline", base_acc), ("vanilla", van), ("stochastic", sto)):
            rows.append({"variant": variant, "train_size": size, "accuracy": ev.accuracy})
        details.append({
            "train_size": size, "ae_epochs": len(hist), "ae_final_mse": reconstruction_mse(ae, train.samples),
            "vanilla_train_accuracy": van_train.accuracy,
            "confusion": {"baseline": base_acc.confusion, "vanilla": van.confusion, "stochastic": sto.confusion},
        })
        if size == k["train_sizes"][-1]:
            ate = attractorize_vanilla(ae, test, k["n_vanilla"], a["tol"])
            write_strip(atr.samples, train.image_shape, out / "atr_vanilla.pgm")
            write_strip(ate.samples, test.image_shape, out / "ate_vanilla.pgm")
            write_strip(atr_s.samples, train.image_shape, out / "atr_stochastic.pgm")
            manifest = [{"set": name, "index": i, "label": int(d.labels[i]), "converged": bool(d.converged[i]),
                         "provenance": d.provenance} for name, d in (("ATR", atr), ("ATE", ate), ("ATR_stochastic", atr_s))
                        for i in range(len(d))]
            write_json(manifest, out / "attractorized_manifest.json")
    write_csv(rows, ["variant", "train_size", "accuracy"], out / "accuracy.csv")
    payload = {"accuracy": rows, "details": details}
    write_json(envelope("classify", cfg, seed, payload, {"train_sizes": len(k["train_sizes"])}),
               out / "classify_report.json")
    return payload


def csi_probes(e0: np.ndarray, e1: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Probes spread along the segment between two examples, plus bounded noise."""
    rng = rng_substream(seed, S_PROBES)
    t = rng.uniform(n)
    noise = 0.05 * (2.0 * rng.uniform((n, e0.size)) - 1.0)
    return np.clip((1 - t)[:, None] * e0 + t[:, None] * e1 + noise, 0.0, 1.0)


def cmd_csi(cfg: RunConfig, out: Path, seed: int) -> dict:
    s = cfg["csi"]
    if s["T"] is None:
        raise UsageError("[csi] T is required (no default radius)")
    a = cfg["autoencoder"]
    train = synth_glyphs(s["classes"], 1, rng_substream(seed, S_GLYPH_TRAIN), a["jitter"])
    ae = _train_ae(cfg, train.samples, seed)[0]
    D = pairwise_example_distance(train)
    X = csi_probes(train.samples[0], train.samples[1], s["n_probes"], seed)
    probes = LabeledDataset(X, np.zeros(len(X), dtype=np.int64), train.class_count)
    cc = CsiConfig(T=s["T"], probes=probes, P=s["P"], tol_attr=s["tol_attr"], seed=seed,
                   T_grid=s["T_grid"] or None, max_steps=s["max_steps"])
    rep = class_separation_index(ae, train, cc)
    payload = {"example_distance": D, "report": rep.to_dict()}
    if cc.T_grid:
        write_csv(sweep_csv_rows(rep), ["T", "I", "t_interior_fraction", "h_fraction", "z_fraction"],
                  out / "tsweep.csv")
    write_json(envelope("csi", cfg, seed, payload, {"probes": len(X), "P": s["P"]}), out / "csi_report.json")
    return payload


def cmd_orbit_check(cfg: RunConfig, out: Path, seed: int, run_dir: Path) -> dict:
    """Re-verify loop closure, G fixed points and (planar) the attractor-hop cycle of a saved run."""
    checks = []
    planar_path, conn_path = run_dir / "planar_report.json", run_dir / "conn_report.json"
    if planar_path.exists():
        rep = read_json(planar_path)
        for run in rep["payload"]["runs"]:
            pc = PlanarConfig.from_dict(run["planar_config"])
            m1, m2 = pc.maps()
            checks.append(_check_orbit(run, m1, m2, planar=pc))
    if conn_path.exists():
        rep = read_json(conn_path)
        p = rep["payload"]
        if p["persons"] == "planar":
            pc = PlanarConfig.from_dict(p["planar_config"])
            m1, m2 = pc.maps()
        else:
            m1 = AutoencoderMap(load_model(run_dir / "person1.bin"))
            m2 = AutoencoderMap(load_model(run_dir / "person2.bin"))
            pc = None
        checks.append(_check_orbit(p, m1, m2, planar=pc))
    if not checks:
        raise UsageError(f"no planar_report.json or conn_report.json in {run_dir}")
    payload = {"run_dir": str(run_dir), "checks": checks, "all_passed": all(c["passed"] for c in checks)}
    write_json(envelope("orbit-check", cfg, seed, payload, {"orbits": len(checks)}), out / "orbit_check.json")
    return payload


def _check_orbit(run: dict, m1, m2, planar=None) -> dict:
    first = OrbitReport.from_dict(run["first_type"])
    tol = 1e-8 if planar is not None else 1e-4
    res = {"first_type_found": first.found}
    if first.found:
        chk = verify_orbit_loop(first, m1, m2, run["nsteps1"], run["nsteps2"])
        res.update(loop_residual=chk["loop_residual"], g_residuals=chk["g_residuals"],
                   K_even=first.period_K % 2 == 0,
                   loop_ok=chk["loop_residual"] < tol and max(chk["g_residuals"]) < tol)
    else:
        res["loop_ok"] = False
    second = OrbitReport.from_dict(run["second_type"])
    res["second_type_found"] = second.found
    if planar is not None and second.found:
        _, hop = attractor_hop_cycle(planar, run["x0"])
        labels = [(1 if h % 2 == 0 else 2, nearest_attractor(planar, 1 if h % 2 == 0 else 2, b)[0])
                  for h, b in enumerate(second.elements)]
        hop_t = [tuple(n) for n in hop]
        res["hop_cycle_match"] = len(hop_t) == len(labels) and any(
            labels[r:] + labels[:r] == hop_t for r in range(0, len(labels), 2))
    res["passed"] = bool(res["loop_ok"] and res.get("hop_cycle_match", True))
    return res


# --------------------------------------------------------------------------


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # the subcommand copy must not reset a flag given before the subcommand
    d = {"default": argparse.SUPPRESS} if suppress else {}
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="sectioned key = value config file", **d)
    common.add_argument("--seed", type=int, help="overrides [experiment] seed", **d)
    common.add_argument("--out", type=Path, help="output directory (overrides [experiment] out)", **d)
    common.add_argument("-v", "--verbose", action="store_true", **d)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="connsim", description=__doc__.splitlines()[0], parents=[_global_flags(False)])
    common = _global_flags(True)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("planar", parents=[common], help="planar two-person runs and orbit report")
    sub.add_parser("conn", parents=[common], help="two-person exchange with planar or autoencoder persons")
    sub.add_parser("train-ae", parents=[common], help="train a memorizing autoencoder")
    sub.add_parser("survey", parents=[common], help="attractor census of an autoencoder")
    sub.add_parser("classify", parents=[common], help="baseline / vanilla / stochastic accuracy")
    sub.add_parser("csi", parents=[common], help="class separation index and T sweep")
    oc = sub.add_parser("orbit-check", parents=[common], help="re-verify orbit properties of a saved run")
    oc.add_argument("--run", type=Path, help="directory of a previous planar/conn run (default: --out)")
    return parser


COMMANDS = {
    "planar": cmd_planar, "conn": cmd_conn, "train-ae": cmd_train_ae, "survey": cmd_survey,
    "classify": cmd_classify, "csi": cmd_csi,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        cfg = load_config(args.config) if args.config else defaults()
        if args.seed is not None:
            cfg.set("experiment", "seed", args.seed)
        if args.out is not None:
            cfg.set("experiment", "out", str(args.out))
        cfg.set("experiment", "kind", args.command)
    except (UsageError, ConfigError, OSError) as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    out = Path(cfg.get("experiment", "out"))
    seed = cfg.get("experiment", "seed")
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(cfg.to_text())
        t0 = time.perf_counter()
        if args.command == "orbit-check":
            payload = cmd_orbit_check(cfg, out, seed, args.run or out)
            ok = payload["all_passed"]
        else:
            COMMANDS[args.command](cfg, out, seed)
            ok = True
        log.info("%s finished in %.2fs (kernels: %s)", args.command, time.perf_counter() - t0, kernels.BACKEND)
    except (UsageError, ConfigError) as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except Exception as exc:  # runtime failure
        log.debug("failure", exc_info=True)
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())

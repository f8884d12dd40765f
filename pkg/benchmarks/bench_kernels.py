"""Time the compiled planar kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--configs 20] [--n-iters 2000] [--repeat 3]

Prints one row per kernel with the best wall time of each backend, the
speedup, and whether the two outputs are bitwise equal.
"""
import argparse
import sys
import timeit

import numpy as np

from connsim import _kernels_py
from connsim.numerics import rng_substream
from connsim.planar import random_planar_config

try:
    from connsim import _kernels as compiled
except ImportError:
    compiled = None


def workload(n_configs: int, seed: int):
    cases = []
    for i in range(n_configs):
        rng = rng_substream(seed, i)
        cfg = random_planar_config(1 + rng.integers(0, 6), 1 + rng.integers(0, 6), (0.3, 0.5, 0.8)[i % 3], rng)
        x, y = rng.uniform(2)
        cases.append((cfg, float(x), float(y)))
    return cases


def interchange_job(mod, cases, nsteps, n_iters):
    def run():
        return [np.asarray(mod.planar_interchange(c.cuts(1), c.cuts(2), c.attractors(1), c.attractors(2),
                                                  c.k, x, y, nsteps, nsteps, n_iters)) for c, x, y in cases]
    return run


def trace_job(mod, cases, n):
    def run():
        return [np.asarray(mod.planar_trace(c.cuts(1), c.attractors(1), 0, c.k, x, y, n)) for c, x, y in cases]
    return run


def best_time(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=int, default=20)
    ap.add_argument("--n-iters", type=int, default=2000, help="exchanges per interchange run")
    ap.add_argument("--nsteps", type=int, default=25)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; rebuild with `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1

    cases = workload(args.configs, args.seed)
    jobs = [
        ("planar_interchange", lambda m: interchange_job(m, cases, args.nsteps, args.n_iters),
         args.configs * args.n_iters * args.nsteps),
        ("planar_trace", lambda m: trace_job(m, cases, args.n_iters * args.nsteps),
         args.configs * args.n_iters * args.nsteps),
    ]
    print(f"{'kernel':<20}{'steps':>12}{'python s':>12}{'compiled s':>12}{'speedup':>10}  bitwise")
    for name, make, steps in jobs:
        py, cy = make(_kernels_py), make(compiled)
        same = all(np.array_equal(a, b) for a, b in zip(py(), cy()))
        t_py, t_cy = best_time(py, args.repeat), best_time(cy, args.repeat)
        print(f"{name:<20}{steps:>12}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

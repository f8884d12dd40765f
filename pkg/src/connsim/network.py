"""Experiment drivers for the two-person network: runs, object perception, orbit studies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DEFAULT_MAX_PERIOD,
    ConstantMap,
    OrbitReport,
    PersonMap,
    detect_first_type_orbit,
    detect_second_type_orbit,
    generate_W,
    interchange_sequence,
    verify_orbit_loop,
)


@dataclass
class ConnExperiment:
    person1: PersonMap
    person2: PersonMap
    x0: np.ndarray
    nsteps1: int = 1
    nsteps2: int = 1
    n_iters: int = 200
    seed: int = 0
    tol: float = 1e-9
    orbit_match_tol: float = 1e-6
    max_period: int = DEFAULT_MAX_PERIOD

    def __post_init__(self):
        if self.person1.shape != self.person2.shape:
            raise ValueError("persons must share the image shape")
        if self.nsteps1 < 1 or self.nsteps2 < 1:
            raise ValueError("nsteps must be >= 1")


@dataclass
class ConnResult:
    U: np.ndarray
    W: np.ndarray
    orbit: OrbitReport
    meta: dict = field(default_factory=dict)


def _orbit_window(n_iters: int, max_period: int) -> int:
    # search the final quarter, but never fewer points than detection needs
    return min(max_period, max(1, (n_iters + 1) // 4))


def run_conn(exp: ConnExperiment, with_W: bool = True) -> ConnResult:
    """Exchange images for ``n_iters`` rounds and look for a first-type orbit in the tail."""
    U = interchange_sequence(exp.person1, exp.person2, exp.x0, exp.nsteps1, exp.nsteps2, exp.n_iters)
    W = generate_W(exp.person1, exp.person2, exp.x0, exp.nsteps1, exp.nsteps2, exp.n_iters) if with_W else None
    mp = _orbit_window(exp.n_iters, exp.max_period)
    orbit = detect_first_type_orbit(U, exp.tol, max_period=mp)
    if len(orbit.elements):
        chk = verify_orbit_loop(orbit, exp.person1, exp.person2, exp.nsteps1, exp.nsteps2)
        orbit.loop_residual = chk["loop_residual"]
        orbit.g_fixed_residuals = chk["g_residuals"]
    return ConnResult(U, W, orbit, {"max_period": mp})


def run_object_perception(person: PersonMap, object_image, nsteps: int, n_iters: int,
                          tol: float = 1e-9) -> ConnResult:
    """The observed object acts as a second person that always returns the same image."""
    obj = ConstantMap(object_image)
    exp = ConnExperiment(person, obj, np.asarray(object_image, dtype=np.float64), nsteps, 1, n_iters, tol=tol)
    return run_conn(exp)


def second_type_study(exp: ConnExperiment, nsteps_schedule) -> OrbitReport:
    mp = _orbit_window(exp.n_iters, exp.max_period)
    return detect_second_type_orbit(exp.person1, exp.person2, exp.x0, nsteps_schedule, exp.tol,
                                    exp.orbit_match_tol, n_iters=exp.n_iters, max_period=mp)

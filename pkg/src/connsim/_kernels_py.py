"""Pure-Python planar kernels; arithmetic mirrors ``_kernels.pyx`` operation for operation."""
from __future__ import annotations

from bisect import bisect_right

import numpy as np


def planar_trace(cuts, attractors, axis, k, x, y, n):
    cuts = list(np.asarray(cuts, dtype=np.float64))
    att = np.asarray(attractors, dtype=np.float64).tolist()
    out = np.empty((n + 1, 2))
    c = 1.0 - k
    out[0, 0] = x
    out[0, 1] = y
    for i in range(n):
        j = bisect_right(cuts, x if axis == 0 else y)
        ax, ay = att[j]
        x = c * ax + k * x
        y = c * ay + k * y
        out[i + 1, 0] = x
        out[i + 1, 1] = y
    return out


def planar_interchange(cuts_a, cuts_b, att1, att2, k, x, y, nsteps1, nsteps2, n_iters):
    cuts = (list(np.asarray(cuts_a, dtype=np.float64)), list(np.asarray(cuts_b, dtype=np.float64)))
    atts = (np.asarray(att1, dtype=np.float64).tolist(), np.asarray(att2, dtype=np.float64).tolist())
    nsteps = (nsteps1, nsteps2)
    out = np.empty((n_iters + 1, 2))
    c = 1.0 - k
    out[0, 0] = x
    out[0, 1] = y
    for it in range(n_iters):
        p = it % 2
        cp, ap = cuts[p], atts[p]
        for _ in range(nsteps[p]):
            j = bisect_right(cp, x if p == 0 else y)
            ax, ay = ap[j]
            x = c * ax + k * x
            y = c * ay + k * y
        out[it + 1, 0] = x
        out[it + 1, 1] = y
    return out

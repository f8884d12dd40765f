# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled planar kernels (same arithmetic as _kernels_py)."""
import numpy as np


cdef inline Py_ssize_t _basin(const double[::1] cuts, double v) noexcept nogil:
    # count of cuts <= v, i.e. bisect_right
    cdef Py_ssize_t lo = 0, hi = cuts.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if v < cuts[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def planar_trace(cuts, attractors, int axis, double k, double x, double y, Py_ssize_t n):
    cdef const double[::1] cv = np.ascontiguousarray(cuts, dtype=np.float64)
    cdef const double[:, ::1] av = np.ascontiguousarray(attractors, dtype=np.float64)
    out = np.empty((n + 1, 2))
    cdef double[:, ::1] o = out
    cdef double c = 1.0 - k
    cdef Py_ssize_t i, j
    o[0, 0] = x
    o[0, 1] = y
    with nogil:
        for i in range(n):
            j = _basin(cv, x if axis == 0 else y)
            x = c * av[j, 0] + k * x
            y = c * av[j, 1] + k * y
            o[i + 1, 0] = x
            o[i + 1, 1] = y
    return out


def planar_interchange(cuts_a, cuts_b, att1, att2, double k, double x, double y,
                       Py_ssize_t nsteps1, Py_ssize_t nsteps2, Py_ssize_t n_iters):
    cdef const double[::1] ca = np.ascontiguousarray(cuts_a, dtype=np.float64)
    cdef const double[::1] cb = np.ascontiguousarray(cuts_b, dtype=np.float64)
    cdef const double[:, ::1] a1 = np.ascontiguousarray(att1, dtype=np.float64)
    cdef const double[:, ::1] a2 = np.ascontiguousarray(att2, dtype=np.float64)
    out = np.empty((n_iters + 1, 2))
    cdef double[:, ::1] o = out
    cdef double c = 1.0 - k
    cdef Py_ssize_t it, s, j
    o[0, 0] = x
    o[0, 1] = y
    with nogil:
        for it in range(n_iters):
            if it % 2 == 0:
                for s in range(nsteps1):
                    j = _basin(ca, x)
                    x = c * a1[j, 0] + k * x
                    y = c * a1[j, 1] + k * y
            else:
                for s in range(nsteps2):
                    j = _basin(cb, y)
                    x = c * a2[j, 0] + k * x
                    y = c * a2[j, 1] + k * y
            o[it + 1, 0] = x
            o[it + 1, 1] = y
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled centroid compression kernel.

Mirrors ``_tdkernel_py`` operation-for-operation (same floating-point
evaluation order) so the two backends produce bit-equal centroids.
"""

from libc.math cimport M_PI, asin, sin

import numpy as np

BACKEND = "compiled"


cdef inline double _k(double q, double delta) noexcept:
    return 0.5 * delta * (asin(2.0 * q - 1.0) / M_PI + 0.5)


cdef inline double _q_limit(double q0, double delta) noexcept:
    cdef double k = _k(q0, delta) + 1.0
    if k >= 0.5 * delta:
        return 1.0
    return 0.5 * (sin(M_PI * (2.0 * k / delta - 0.5)) + 1.0)


def compress(double[::1] means, double[::1] weights, double delta):
    """Merge adjacent centroids of a mean-sorted list under the scale function.

    Returns (means, weights) arrays of the surviving centroids, still sorted.
    """
    cdef Py_ssize_t n = means.shape[0]
    if n == 0:
        return np.empty(0), np.empty(0)

    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total += weights[i]

    out_m_arr = np.empty(n)
    out_w_arr = np.empty(n)
    cdef double[::1] out_m = out_m_arr
    cdef double[::1] out_w = out_w_arr
    cdef Py_ssize_t m = 0

    cdef double cur_mean = means[0]
    cdef double cur_w = weights[0]
    cdef double closed_w = 0.0
    cdef double q_limit = _q_limit(0.0, delta)
    cdef double w, proposed_q

    for i in range(1, n):
        w = weights[i]
        proposed_q = (closed_w + cur_w + w) / total
        if proposed_q <= q_limit:
            cur_mean = (cur_mean * cur_w + means[i] * w) / (cur_w + w)
            cur_w += w
        else:
            out_m[m] = cur_mean
            out_w[m] = cur_w
            m += 1
            closed_w += cur_w
            q_limit = _q_limit(closed_w / total, delta)
            cur_mean = means[i]
            cur_w = w

    out_m[m] = cur_mean
    out_w[m] = cur_w
    m += 1
    return out_m_arr[:m].copy(), out_w_arr[:m].copy()

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Contracts (argument layout, draw order, summation order) are shared with
irbp._kernels.pure; simulate_replica must stay operation-for-operation
identical to the pure version so trajectories agree bit for bit.
"""

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log, log1p, NAN
from numpy.random cimport bitgen_t

NAME = "compiled"


cdef bitgen_t *_bitgen_ptr(bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


def simulate_replica(const double[:, ::1] gamma_t,
                     double[::1] theta,
                     double[::1] c,
                     const double[::1] cum_pi,
                     const long long[::1] shock_t,
                     const long long[::1] shock_proc,
                     const double[::1] shock_theta,
                     const double[::1] shock_c,
                     const long long[::1] schedule,
                     long long t_max,
                     bit_generator,
                     long long[:, ::1] s_out,
                     double[:, ::1] p_out,
                     long long[:, :, ::1] split_out):
    """Run one replica, filling checkpoint buffers in place.

    gamma_t is the transposed interaction matrix (row h = weights into
    process h).  theta and c are working copies; shocks overwrite them.
    cum_pi is the cumulative source-category law ending exactly at 1.0, or
    an empty array to disable category tracking (split_out then has zero
    rows).  Shocks are sorted by shock_t and replace (theta, c) right
    before the success probabilities of their step are computed.
    """
    cdef bitgen_t *rng = _bitgen_ptr(bit_generator)
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t n_shocks = shock_t.shape[0]
    cdef Py_ssize_t n_ck = schedule.shape[0]
    cdef bint has_pi = cum_pi.shape[0] > 0

    s_buf = np.zeros(n, dtype=np.int64)
    p_buf = np.empty(n, dtype=np.float64)
    x_buf = np.zeros(n, dtype=np.int64)
    if has_pi:
        split_buf = np.zeros((n, n), dtype=np.int64)
    else:
        split_buf = np.zeros((0, 0), dtype=np.int64)
    cdef long long[::1] s = s_buf
    cdef double[::1] p = p_buf
    cdef long long[::1] x = x_buf
    cdef long long[:, ::1] split = split_buf

    cdef Py_ssize_t h, j, k, ck = 0, ish = 0
    cdef long long step
    cdef double u, acc

    with nogil:
        for h in range(n):
            p[h] = theta[h] / c[h]
        k = 0
        for step in range(1, t_max + 1):
            for h in range(n):
                u = rng.next_double(rng.state)
                x[h] = 1 if u < p[h] else 0
            if has_pi:
                u = rng.next_double(rng.state)
                k = 0
                while u >= cum_pi[k]:
                    k += 1
            for h in range(n):
                if x[h]:
                    s[h] += 1
                    if has_pi:
                        split[k, h] += 1
            while ish < n_shocks and shock_t[ish] == step:
                theta[shock_proc[ish]] = shock_theta[ish]
                c[shock_proc[ish]] = shock_c[ish]
                ish += 1
            for h in range(n):
                acc = theta[h]
                for j in range(n):
                    acc += gamma_t[h, j] * s[j]
                p[h] = acc / (c[h] + step)
            if ck < n_ck and schedule[ck] == step:
                for h in range(n):
                    s_out[ck, h] = s[h]
                    p_out[ck, h] = p[h]
                if has_pi and split_out.shape[0] > 0:
                    for j in range(n):
                        for h in range(n):
                            split_out[ck, j, h] = split[j, h]
                ck += 1


def expected_counts(const double[:, ::1] gamma_t,
                    double[::1] theta,
                    double[::1] c,
                    const long long[::1] shock_t,
                    const long long[::1] shock_proc,
                    const double[::1] shock_theta,
                    const double[::1] shock_c,
                    const long long[::1] checkpoints,
                    long long t_max,
                    double[:, ::1] out):
    """Exact expectation recursion E[S_{t+1}] = E[S_t] + E[P_t].

    checkpoints are sorted unique values in [0, t_max]; out[i] receives
    E[S_{checkpoints[i]}].  Shock convention matches simulate_replica.
    """
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t n_shocks = shock_t.shape[0]
    cdef Py_ssize_t n_ck = checkpoints.shape[0]

    es_buf = np.zeros(n, dtype=np.float64)
    inc_buf = np.zeros(n, dtype=np.float64)
    cdef double[::1] es = es_buf
    cdef double[::1] inc = inc_buf

    cdef Py_ssize_t h, j, ck = 0, ish = 0
    cdef long long t
    cdef double acc

    with nogil:
        for t in range(0, t_max + 1):
            if ck < n_ck and checkpoints[ck] == t:
                for h in range(n):
                    out[ck, h] = es[h]
                ck += 1
            if t == t_max:
                break
            while ish < n_shocks and shock_t[ish] == t:
                theta[shock_proc[ish]] = shock_theta[ish]
                c[shock_proc[ish]] = shock_c[ish]
                ish += 1
            # increments read the old vector only (Jacobi, not Gauss-Seidel)
            for h in range(n):
                acc = theta[h]
                for j in range(n):
                    acc += gamma_t[h, j] * es[j]
                inc[h] = acc / (c[h] + t)
            for h in range(n):
                es[h] += inc[h]


def mean_field_loglik(const unsigned char[:, ::1] x,
                      const double[::1] theta,
                      const double[::1] c,
                      double gamma_star,
                      double iota):
    """Joint Bernoulli log-likelihood of a success matrix under the
    one-parameter symmetric interaction family.

    Returns NaN when a probability of exactly 1 meets an observed failure
    (degenerate likelihood).
    """
    cdef Py_ssize_t rows = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]

    s_buf = np.zeros(n, dtype=np.int64)
    cdef long long[::1] s = s_buf

    cdef Py_ssize_t i, h
    cdef long long ssum = 0
    cdef double ll = 0.0, sbar, p
    cdef bint degenerate = 0

    with nogil:
        for i in range(rows):
            sbar = ssum / <double> n
            for h in range(n):
                p = (theta[h] + gamma_star * (iota * sbar + (1.0 - iota) * s[h])) / (c[h] + i)
                if x[i, h]:
                    ll += log(p)
                else:
                    if p >= 1.0:
                        degenerate = 1
                        break
                    ll += log1p(-p)
            if degenerate:
                break
            for h in range(n):
                if x[i, h]:
                    s[h] += 1
                    ssum += 1
    if degenerate:
        return NAN
    return ll

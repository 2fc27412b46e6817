# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: counter-based variates and per-sample upload maxima.

Must stay numerically in lockstep with ``_kernels_py``; see that module for
the stream-derivation formula.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, sqrt, cos, ceil, pow, M_PI
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0

BACKEND = "cython"


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _stream_id(uint64_t sample, uint64_t user, uint64_t phase) noexcept nogil:
    return _mix64(_mix64(_mix64(phase + GOLDEN) ^ user) ^ sample)


cdef inline double _uniform(uint64_t key, uint64_t counter) noexcept nogil:
    # key = mix64(seed ^ stream_id)
    cdef uint64_t bits = _mix64(key + (counter + 1) * GOLDEN)
    return (<double>(bits >> 11) + 0.5) * TWO_M53


cdef inline int64_t _geometric(uint64_t key, double log_fail) noexcept nogil:
    cdef double u = _uniform(key, 0)
    cdef double m = ceil(log1p(-u) / log_fail)
    if m < 1.0:
        return 1
    return <int64_t>m


cdef inline double _gamma(uint64_t key, double shape, double scale) noexcept nogil:
    cdef double a = shape
    cdef double boost = 1.0
    cdef double d, c, x, v, u
    cdef uint64_t r = 0
    if a < 1.0:
        boost = pow(_uniform(key, 0), 1.0 / a)
        a = a + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = sqrt(-2.0 * log(_uniform(key, 1 + 3 * r))) * cos(2.0 * M_PI * _uniform(key, 2 + 3 * r))
        u = _uniform(key, 3 + 3 * r)
        r += 1
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        if log(u) < 0.5 * x * x + d - d * v + d * log(v):
            return d * v * boost * scale


def stream_ids(sample_idx, user_idx, uint64_t phase):
    s = np.ascontiguousarray(sample_idx, dtype=np.uint64)
    u = np.ascontiguousarray(user_idx, dtype=np.uint64)
    s, u = np.broadcast_arrays(s, u)
    s = np.ascontiguousarray(s).ravel()
    u = np.ascontiguousarray(u).ravel()
    out = np.empty(s.shape[0], dtype=np.uint64)
    cdef const uint64_t[::1] sv = s
    cdef const uint64_t[::1] uv = u
    cdef uint64_t[::1] ov = out
    cdef Py_ssize_t k
    with nogil:
        for k in range(sv.shape[0]):
            ov[k] = _stream_id(sv[k], uv[k], phase)
    return out.reshape(np.broadcast_shapes(np.shape(sample_idx), np.shape(user_idx)))


def uniforms(uint64_t seed, ids, counters):
    shape = np.broadcast_shapes(np.shape(ids), np.shape(counters))
    i = np.ascontiguousarray(ids, dtype=np.uint64)
    c = np.ascontiguousarray(counters, dtype=np.uint64)
    i, c = np.broadcast_arrays(i, c)
    i = np.ascontiguousarray(i).ravel()
    c = np.ascontiguousarray(c).ravel()
    out = np.empty(i.shape[0], dtype=np.float64)
    cdef const uint64_t[::1] iv = i
    cdef const uint64_t[::1] cv = c
    cdef double[::1] ov = out
    cdef Py_ssize_t k
    with nogil:
        for k in range(iv.shape[0]):
            ov[k] = _uniform(_mix64(seed ^ iv[k]), cv[k])
    return out.reshape(shape)


def geometric_variates(uint64_t seed, ids, double eta):
    i = np.ascontiguousarray(ids, dtype=np.uint64).ravel()
    out = np.empty(i.shape[0], dtype=np.int64)
    cdef const uint64_t[::1] iv = i
    cdef int64_t[::1] ov = out
    cdef double log_fail = log1p(-eta)
    cdef Py_ssize_t k
    with nogil:
        for k in range(iv.shape[0]):
            ov[k] = _geometric(_mix64(seed ^ iv[k]), log_fail)
    return out.reshape(np.shape(ids))


def gamma_variates(uint64_t seed, ids, double shape, double scale):
    i = np.ascontiguousarray(ids, dtype=np.uint64).ravel()
    out = np.empty(i.shape[0], dtype=np.float64)
    cdef const uint64_t[::1] iv = i
    cdef double[::1] ov = out
    cdef Py_ssize_t k
    with nogil:
        for k in range(iv.shape[0]):
            ov[k] = _gamma(_mix64(seed ^ iv[k]), shape, scale)
    return out.reshape(np.shape(ids))


def draw_attempts(uint64_t seed, uint64_t sample_start, Py_ssize_t n_samples,
                  Py_ssize_t n_users, double eta, uint64_t phase):
    out = np.empty((n_samples, n_users), dtype=np.int64)
    cdef int64_t[:, ::1] ov = out
    cdef double log_fail = log1p(-eta)
    cdef Py_ssize_t s, l
    with nogil:
        for s in range(n_samples):
            for l in range(n_users):
                ov[s, l] = _geometric(
                    _mix64(seed ^ _stream_id(sample_start + s, l, phase)), log_fail)
    return out


def draw_backhaul(uint64_t seed, uint64_t sample_start, Py_ssize_t n_samples,
                  cross_mask, double shape, double scale, uint64_t phase):
    m = np.ascontiguousarray(cross_mask, dtype=np.uint8)
    cdef const unsigned char[::1] mv = m
    cdef Py_ssize_t n_users = mv.shape[0]
    out = np.zeros((n_samples, n_users), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t s, l
    with nogil:
        for s in range(n_samples):
            for l in range(n_users):
                if mv[l]:
                    ov[s, l] = _gamma(
                        _mix64(seed ^ _stream_id(sample_start + s, l, phase)), shape, scale)
    return out


def upload_maxima(attempts, backhaul, coef, bounds):
    """Per-sample max of ``attempts * coef + backhaul`` over each user block.

    ``bounds`` is a sequence of (start, stop) user ranges; empty ranges give
    a maximum of 0 and an argmax of -1. Ties go to the lowest user index.
    """
    cdef const int64_t[:, ::1] mv = np.ascontiguousarray(attempts, dtype=np.int64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(backhaul, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(coef, dtype=np.float64)
    b = np.ascontiguousarray(bounds, dtype=np.int64).reshape(-1, 2)
    cdef const int64_t[:, ::1] bd = b
    cdef Py_ssize_t n_samples = mv.shape[0]
    cdef Py_ssize_t n_blocks = bd.shape[0]
    maxima = np.zeros((n_samples, n_blocks), dtype=np.float64)
    argmax = np.full((n_samples, n_blocks), -1, dtype=np.int64)
    cdef double[:, ::1] xv = maxima
    cdef int64_t[:, ::1] av = argmax
    cdef Py_ssize_t s, g, l, best
    cdef double val, top
    with nogil:
        for s in range(n_samples):
            for g in range(n_blocks):
                best = -1
                top = 0.0
                for l in range(bd[g, 0], bd[g, 1]):
                    val = <double>mv[s, l] * cv[l] + bv[s, l]
                    if best < 0 or val > top:
                        top = val
                        best = l
                xv[s, g] = top
                av[s, g] = best
    return maxima, argmax

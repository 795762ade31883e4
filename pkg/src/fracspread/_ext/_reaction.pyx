# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused pointwise RK4 sweep for the saturating cooperative reaction.

Each grid point carries an independent m-dimensional ODE
    s_i' = sum_{j != i} K_ij s_j + r_i s_i - q_i g(s_i)
with g the saturation power, linearly extended above ``lam`` and zero
below 0.  The numpy fallback in ``fracspread.kernels`` computes the same
thing with whole-array temporaries.
"""
from libc.math cimport pow
from libc.stdlib cimport free, malloc

import numpy as np


cdef inline double _sat(double s, double delta, double lam, double lam_pow,
                        double lam_slope, int mode) noexcept nogil:
    if s <= 0.0:
        return 0.0
    if s > lam:
        return lam_pow + lam_slope * (s - lam)
    if mode == 1:
        return s * s
    if mode == 2:
        return s * s * s
    return pow(s, 1.0 + delta)


cdef inline void _rhs(const double* s, double* out, int m, const double* K,
                      const double* r, const double* q, double delta, double lam,
                      double lam_pow, double lam_slope, int mode) noexcept nogil:
    cdef int i, j
    cdef double acc
    for i in range(m):
        acc = r[i] * s[i] - q[i] * _sat(s[i], delta, lam, lam_pow, lam_slope, mode)
        for j in range(m):
            if j != i:
                acc += K[i * m + j] * s[j]
        out[i] = acc


def reaction_rk4(double[:, ::1] u, double[:, ::1] K, double[::1] r, double[::1] q,
                 double delta, double lam, double h):
    """Advance every column of ``u`` (shape (m, n)) by one RK4 step of size h.

    Returns a new array; ``u`` is left untouched.
    """
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t n = u.shape[1]
    if K.shape[0] != m or K.shape[1] != m or r.shape[0] != m or q.shape[0] != m:
        raise ValueError("coefficient shapes do not match the field")

    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] Kc = np.ascontiguousarray(K)
    cdef double lam_pow = pow(lam, 1.0 + delta)
    cdef double lam_slope = (1.0 + delta) * pow(lam, delta)
    cdef int mode = 0
    if delta == 1.0:
        mode = 1
    elif delta == 2.0:
        mode = 2

    cdef double* buf = <double*> malloc(6 * m * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* s0 = buf
    cdef double* st = buf + m
    cdef double* k1 = buf + 2 * m
    cdef double* k2 = buf + 3 * m
    cdef double* k3 = buf + 4 * m
    cdef double* k4 = buf + 5 * m
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef Py_ssize_t col
    cdef int i
    cdef int mi = <int> m
    try:
        with nogil:
            for col in range(n):
                for i in range(mi):
                    s0[i] = u[i, col]
                _rhs(s0, k1, mi, &Kc[0, 0], &r[0], &q[0], delta, lam, lam_pow, lam_slope, mode)
                for i in range(mi):
                    st[i] = s0[i] + half * k1[i]
                _rhs(st, k2, mi, &Kc[0, 0], &r[0], &q[0], delta, lam, lam_pow, lam_slope, mode)
                for i in range(mi):
                    st[i] = s0[i] + half * k2[i]
                _rhs(st, k3, mi, &Kc[0, 0], &r[0], &q[0], delta, lam, lam_pow, lam_slope, mode)
                for i in range(mi):
                    st[i] = s0[i] + h * k3[i]
                _rhs(st, k4, mi, &Kc[0, 0], &r[0], &q[0], delta, lam, lam_pow, lam_slope, mode)
                for i in range(mi):
                    out[i, col] = s0[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    finally:
        free(buf)
    return out_arr

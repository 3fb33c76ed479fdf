# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see _kernels_py for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs, atan2, INFINITY

cnp.import_array()


def gap_scan(phi, Q, double k, chunk=256):
    cdef double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64).ravel()
    cdef double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t n = ph.shape[0], m = q.shape[0], i, a
    best_arr = np.empty(n, dtype=np.float64)
    arg_arr = np.zeros(n, dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef long long[::1] arg = arg_arr
    q2_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] q2 = q2_arr
    cdef double c, s, v, b
    cdef long long ib
    for a in range(m):
        q2[a] = q[a, 0] * q[a, 0] + q[a, 1] * q[a, 1]
    for i in range(n):
        c = 2.0 * k * cos(ph[i])
        s = 2.0 * k * sin(ph[i])
        b = INFINITY
        ib = 0
        for a in range(m):
            v = fabs(q2[a] + c * q[a, 0] + s * q[a, 1])
            if v < b:
                b = v
                ib = a
        best[i] = b
        arg[i] = ib
    shape = np.shape(phi)
    return best_arr.reshape(shape), arg_arr.reshape(shape)


def fill_matrix(basis, diag, grid, offset):
    cdef long long[:, ::1] B = np.ascontiguousarray(basis, dtype=np.int64).reshape(-1, 2)
    cdef double complex[::1] d = np.ascontiguousarray(diag, dtype=np.complex128)
    cdef double complex[:, ::1] g = np.ascontiguousarray(grid, dtype=np.complex128)
    cdef long long o0 = offset[0], o1 = offset[1]
    cdef Py_ssize_t n = B.shape[0], a, b
    cdef long long s0 = g.shape[0], s1 = g.shape[1], x, y
    M_arr = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] M = M_arr
    for a in range(n):
        for b in range(n):
            x = B[a, 0] - B[b, 0] + o0
            y = B[a, 1] - B[b, 1] + o1
            if 0 <= x < s0 and 0 <= y < s1:
                M[a, b] = g[x, y]
        M[a, a] = M[a, a] + d[a]
    return M_arr


cdef inline double _arg_ratio(double complex u, double complex v):
    # angle of u / v without forming the quotient
    cdef double re = u.real * v.real + u.imag * v.imag
    cdef double im = u.imag * v.real - u.real * v.imag
    return atan2(im, re)


def winding_phase(values):
    cdef double complex[::1] v = np.ascontiguousarray(values, dtype=np.complex128)
    cdef Py_ssize_t n = v.shape[0], i
    cdef double total = 0.0, step, worst = 0.0
    if n == 0:
        return 0.0, 0.0
    for i in range(n - 1):
        step = _arg_ratio(v[i + 1], v[i])
        total += step
        if fabs(step) > worst:
            worst = fabs(step)
    step = _arg_ratio(v[0], v[n - 1])
    total += step
    if fabs(step) > worst:
        worst = fabs(step)
    return total, worst


def open_phase(values):
    cdef double complex[::1] v = np.ascontiguousarray(values, dtype=np.complex128)
    cdef Py_ssize_t n = v.shape[0], i
    cdef double total = 0.0, step, worst = 0.0
    for i in range(n - 1):
        step = _arg_ratio(v[i + 1], v[i])
        total += step
        if fabs(step) > worst:
            worst = fabs(step)
    return total, worst

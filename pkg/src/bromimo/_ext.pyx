# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as ``bromimo._pykernels``."""

import numpy as np

from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dsymv, ddot


cdef inline double _clip(double v) noexcept nogil:
    if v < -1.0:
        return -1.0
    if v > 1.0:
        return 1.0
    return v


cdef double _pg_norm(const double[::1] x, const double[::1] w, const double[::1] q, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double g, acc = 0.0
    for i in range(n):
        g = w[i] - q[i]
        if x[i] <= -1.0:
            if g > 0.0:
                g = 0.0
        elif x[i] >= 1.0:
            if g < 0.0:
                g = 0.0
        acc += g * g
    return sqrt(acc)


cdef inline void _symv(const double[:, ::1] P, double[::1] x, double[::1] out, int n) noexcept nogil:
    cdef char uplo = b'L'
    cdef double one = 1.0, zero = 0.0
    cdef int inc = 1
    dsymv(&uplo, &n, &one, <double*>&P[0, 0], &n, &x[0], &inc, &zero, &out[0], &inc)


cdef inline double _objective(double[::1] x, double[::1] w, const double[::1] q, int n) noexcept nogil:
    cdef int inc = 1
    return 0.5 * ddot(&n, &x[0], &inc, &w[0], &inc) - ddot(&n, <double*>&q[0], &inc, &x[0], &inc)


def projected_gradient_norm(x, g):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=float)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=float)
    cdef const double[::1] zeros = np.zeros(gv.shape[0])
    return _pg_norm(xv, gv, zeros, xv.shape[0])


def box_qp_apg(P, q, x0, double lipschitz, double tol, int max_iters):
    cdef const double[:, ::1] Pm = np.ascontiguousarray(P, dtype=float)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=float)
    cdef int n = qv.shape[0]
    x_arr = np.clip(np.asarray(x0, dtype=float), -1.0, 1.0)
    hist_arr = np.empty(max_iters + 1)
    cdef double[::1] x = x_arr
    cdef double[::1] x_prev = x_arr.copy()
    cdef double[::1] w = np.empty(n)
    cdef double[::1] w_prev = np.empty(n)
    cdef double[::1] x_new = np.empty(n)
    cdef double[::1] w_new = np.empty(n)
    cdef double[::1] hist = hist_arr
    cdef double[::1] tmp
    cdef double inv_l = 1.0 / lipschitz
    cdef double t = 1.0, t_next, theta, f, f_new, v, pv, pg
    cdef int it = 0
    cdef Py_ssize_t i

    with nogil:
        _symv(Pm, x, w, n)
        w_prev[:] = w
        f = _objective(x, w, qv, n)
        hist[0] = f
        pg = _pg_norm(x, w, qv, n)
        while pg > tol and it < max_iters:
            it += 1
            t_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
            theta = (t - 1.0) / t_next
            for i in range(n):
                v = x[i] + theta * (x[i] - x_prev[i])
                pv = w[i] + theta * (w[i] - w_prev[i])
                x_new[i] = _clip(v - inv_l * (pv - qv[i]))
            _symv(Pm, x_new, w_new, n)
            f_new = _objective(x_new, w_new, qv, n)
            if f_new > f:
                t_next = 1.0
                for i in range(n):
                    x_new[i] = _clip(x[i] - inv_l * (w[i] - qv[i]))
                _symv(Pm, x_new, w_new, n)
                f_new = _objective(x_new, w_new, qv, n)
            # rotate buffers: prev <- current <- new
            tmp = x_prev
            x_prev = x
            x = x_new
            x_new = tmp
            tmp = w_prev
            w_prev = w
            w = w_new
            w_new = tmp
            f = f_new
            t = t_next
            hist[it] = f
            pg = _pg_norm(x, w, qv, n)

    return np.asarray(x).copy(), it, pg, hist_arr[: it + 1].copy()


def saddle_sum(lam, num, double sqrt_rd, double gamma):
    cdef const double[::1] lv = np.ascontiguousarray(lam, dtype=float)
    cdef const double[::1] nv = np.ascontiguousarray(num, dtype=float)
    cdef Py_ssize_t j, m = lv.shape[0]
    cdef double s, den, value = 0.0, deriv = 0.0
    with nogil:
        for j in range(m):
            s = lv[j] * sqrt_rd
            den = 0.5 * gamma + s
            value += nv[j] * gamma / den
            deriv += nv[j] * s / (den * den)
    return value, deriv

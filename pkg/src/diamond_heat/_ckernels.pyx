# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the real 1-d kernel sums (see ``_pykernels``)."""

import numpy as np

from libc.math cimport exp, cos, sin, sqrt, M_PI


def wrapped_gaussian(d, double t, double period, Py_ssize_t M):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64).ravel()
    cdef Py_ssize_t n = dv.shape[0], i, m
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double inv4t = 1.0 / (4.0 * t)
    cdef double pref = 1.0 / sqrt(4.0 * M_PI * t)
    cdef double step2 = exp(-2.0 * period * period * inv4t)
    cdef double s, x, e0, term, a, tail
    with nogil:
        for i in range(n):
            x = dv[i]
            e0 = exp(-x * x * inv4t)
            # Consecutive images differ by a factor a_m with a_{m+1} = a_m * step2.
            # Since |x| <= P/2, a_0 = exp(-(2xP + P^2)/4t) <= 1: no overflow.
            tail = 0.0
            term = e0
            a = exp(-(2.0 * x * period + period * period) * inv4t)
            for m in range(M):
                term = term * a
                tail += term
                a = a * step2
            term = e0
            a = exp(-(-2.0 * x * period + period * period) * inv4t)
            for m in range(M):
                term = term * a
                tail += term
                a = a * step2
            ov[i] = (e0 + tail) * pref
    return out.reshape(np.shape(d))


def cosine_series(d, double t, double period, Py_ssize_t K):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64).ravel()
    cdef Py_ssize_t n = dv.shape[0], i, k
    cdef double omega = 2.0 * M_PI / period
    weights = np.exp(-((omega * np.arange(K + 1)) ** 2) * t)
    cdef const double[::1] w = weights
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double s, c1, s1, c, sn, tmp
    with nogil:
        for i in range(n):
            # cos(k x) by rotation; rounding grows linearly in k.
            c1 = cos(omega * dv[i])
            s1 = sin(omega * dv[i])
            c = 1.0
            sn = 0.0
            s = 0.0
            for k in range(1, K + 1):
                if w[k] == 0.0:
                    break
                tmp = c * c1 - sn * s1
                sn = sn * c1 + c * s1
                c = tmp
                s += w[k] * c
            ov[i] = (1.0 + 2.0 * s) / period
    return out.reshape(np.shape(d))


def sine_series(a, b, double t, double L, Py_ssize_t K):
    shape = np.broadcast(a, b).shape
    a_b, b_b = np.broadcast_arrays(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    cdef const double[::1] av = np.ascontiguousarray(a_b).ravel()
    cdef const double[::1] bv = np.ascontiguousarray(b_b).ravel()
    cdef Py_ssize_t n = av.shape[0], i, k
    cdef double sc = M_PI / L
    weights = np.exp(-((sc * np.arange(K + 1)) ** 2) * t)
    cdef const double[::1] w = weights
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double s, ca, sa, cb, sb, xa, ya, xb, yb, tmp
    with nogil:
        for i in range(n):
            # sin(k a) sin(k b) with both angles advanced by rotation.
            ca = cos(sc * av[i])
            sa = sin(sc * av[i])
            cb = cos(sc * bv[i])
            sb = sin(sc * bv[i])
            xa = 1.0
            ya = 0.0
            xb = 1.0
            yb = 0.0
            s = 0.0
            for k in range(1, K + 1):
                if w[k] == 0.0:
                    break
                tmp = xa * ca - ya * sa
                ya = ya * ca + xa * sa
                xa = tmp
                tmp = xb * cb - yb * sb
                yb = yb * cb + xb * sb
                xb = tmp
                s += w[k] * ya * yb
            ov[i] = (2.0 / L) * s
    return out.reshape(shape)

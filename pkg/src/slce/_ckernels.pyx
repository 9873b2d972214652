# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``."""

import numpy as np

from libc.math cimport sqrt, pow


def adam_update(double[::1] params, const double[::1] grad, double[::1] m,
                double[::1] v, long step, double lr, double beta1,
                double beta2, double eps):
    cdef Py_ssize_t i, n = params.shape[0]
    cdef double bc1 = 1.0 - pow(beta1, <double>step)
    cdef double bc2 = 1.0 - pow(beta2, <double>step)
    cdef double g, mi, vi
    if grad.shape[0] != n or m.shape[0] != n or v.shape[0] != n:
        raise ValueError("adam_update: length mismatch")
    with nogil:
        for i in range(n):
            g = grad[i]
            mi = beta1 * m[i] + (1.0 - beta1) * g
            vi = beta2 * v[i] + (1.0 - beta2) * (g * g)
            m[i] = mi
            v[i] = vi
            params[i] -= lr * (mi / bc1) / (sqrt(vi / bc2) + eps)


def gate_contraction(const double[:, ::1] G, const double[:, ::1] X):
    cdef Py_ssize_t j, i
    cdef Py_ssize_t d = G.shape[0], n = G.shape[1]
    cdef double acc
    if X.shape[0] != d or X.shape[1] != n:
        raise ValueError("gate_contraction: shape mismatch")
    res = np.empty(d, dtype=np.float64)
    cdef double[::1] r = res
    with nogil:
        for j in range(d):
            acc = 0.0
            for i in range(n):
                acc = acc + G[j, i] * X[j, i]
            r[j] = acc
    return res


def max_ratio_cut(const double[::1] weights, double eps):
    cdef Py_ssize_t p, best = 1, d = weights.shape[0]
    cdef double ratio, best_ratio
    if d < 2:
        raise ValueError("max_ratio_cut: need at least two weights")
    best_ratio = weights[0] / (weights[1] + eps)
    for p in range(2, d):
        ratio = weights[p - 1] / (weights[p] + eps)
        if ratio > best_ratio:
            best_ratio = ratio
            best = p
    return best, best_ratio

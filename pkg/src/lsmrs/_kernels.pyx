# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pairwise distances and edge log-likelihood sums.

Same API and conventions as ``lsmrs._kernels_py`` (the pure NumPy
fallback): likelihood sums drop weight-only constants, which cancel in
every Metropolis-Hastings ratio.
"""

from libc.math cimport exp, log1p, sqrt

import numpy as np

BERNOULLI = 0
POISSON = 1


cdef inline double _softplus(double x) nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _edge_ll(double y, double eta, long fam) nogil:
    if fam == 0:
        return y * eta - _softplus(eta)
    return y * eta - exp(eta)


def pair_dists(double[:, ::1] coords, bint squared):
    """Pairwise distances of the (N, d) rows, flat upper triangle (i < j)."""
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t d = coords.shape[1]
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j, k, p = 0
    cdef double s, diff
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                s = 0.0
                for k in range(d):
                    diff = coords[i, k] - coords[j, k]
                    s += diff * diff
                o[p] = s if squared else sqrt(s)
                p += 1
    return out


def pairs_loglik(double[::1] y, long fam, double alpha, double[::1] dists):
    """Edge log-likelihood summed over a flat pair array for one layer."""
    cdef Py_ssize_t p, m = y.shape[0]
    cdef double total = 0.0
    with nogil:
        for p in range(m):
            total += _edge_ll(y[p], alpha - dists[p], fam)
    return total


def node_loglik(double[:, :, :] weights_t, long[::1] fams, double[:] alpha_t,
                double[:, ::1] coords_t, Py_ssize_t i, double[::1] xi,
                bint squared):
    """Edge log-likelihood of node i against all partners, summed over layers."""
    cdef Py_ssize_t R = weights_t.shape[0]
    cdef Py_ssize_t n = coords_t.shape[0]
    cdef Py_ssize_t d = coords_t.shape[1]
    cdef Py_ssize_t r, j, k
    cdef double s, diff, total = 0.0
    with nogil:
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for k in range(d):
                diff = xi[k] - coords_t[j, k]
                s += diff * diff
            if not squared:
                s = sqrt(s)
            for r in range(R):
                total += _edge_ll(weights_t[r, i, j], alpha_t[r] - s, fams[r])
    return total


def node_loglik_delta(double[:, :, :] weights_t, long[::1] fams, double[:] alpha_t,
                      double[:, ::1] coords_t, Py_ssize_t i, double[::1] x_new,
                      bint squared):
    """Change in node i's edge log-likelihood when x_i moves to ``x_new``.

    Fused candidate/current pass: one read of the weight row per layer.
    """
    cdef Py_ssize_t R = weights_t.shape[0]
    cdef Py_ssize_t n = coords_t.shape[0]
    cdef Py_ssize_t d = coords_t.shape[1]
    cdef Py_ssize_t r, j, k
    cdef double dn, do, diff, y, a, total = 0.0
    with nogil:
        for j in range(n):
            if j == i:
                continue
            dn = 0.0
            do = 0.0
            for k in range(d):
                diff = x_new[k] - coords_t[j, k]
                dn += diff * diff
                diff = coords_t[i, k] - coords_t[j, k]
                do += diff * diff
            if not squared:
                dn = sqrt(dn)
                do = sqrt(do)
            for r in range(R):
                y = weights_t[r, i, j]
                a = alpha_t[r]
                total += _edge_ll(y, a - dn, fams[r]) - _edge_ll(y, a - do, fams[r])
    return total
